#!/usr/bin/env python3
"""Brute-force recomputation of session aggregates from an instant trace.

Reads the config and the JSONL written by `danse run --instants`, rebuilds
every trial from UI events and raw contactDown samples (never from
trialRecord), and prints the aggregates as JSON.

Static targets only.

usage: stats_oracle.py CONFIG INSTANTS
"""
import json
import math
import sys
from fractions import Fraction

FINGERS = ["thumb", "index", "middle", "ring", "little"]


def default_layout(hand):
    sign = [(0.02, 0.10, 0.18, 0.40), (0.02, 0.60, 0.18, 0.90)]
    play = (0.25, 0.02, 0.98, 0.72)
    crown = (0.45, 0.76, 0.78, 0.98)
    if hand == "left":
        m = lambda r: (1 - r[2], r[1], 1 - r[0], r[3])
        sign, play, crown = [m(s) for s in sign], m(play), m(crown)
    return {"sign": sign, "play": play, "crown": crown}


def rect(r):
    if isinstance(r, dict):
        return (r["left"], r["top"], r["right"], r["bottom"])
    return r


def inside(r, x, y):
    return r is not None and r[0] <= x <= r[2] and r[1] <= y <= r[3]


def zone(layout, x, y):
    if inside(layout["crown"], x, y):
        return "crown"
    if any(inside(s, x, y) for s in layout["sign"]):
        return "sign"
    if inside(layout["play"], x, y):
        return "play"
    return "dead"


def main(config_path, instants_path):
    cfg = json.load(open(config_path))
    hz = cfg.get("tick_hz", 60)
    if "layout" in cfg:
        lay = cfg["layout"]
        layout = {
            "sign": [rect(s) for s in lay["sign_zones"]],
            "play": rect(lay["play_area"]),
            "crown": rect(lay["crown_zone"]) if lay.get("crown_zone") else None,
        }
    else:
        layout = default_layout(cfg["trained_hand"])
    sub = next(s for s in cfg["subthemes"] if s["name"] == cfg.get("subtheme", cfg["subthemes"][0]["name"]))
    timeouts_ms = {g["name"]: g.get("timeout_ms", 5000) for g in sub["games"]}

    trials = []
    game = None
    trial = None  # open trial: dict with state crown|target
    paused = False
    pause_start = None

    def open_trial(finger, instant):
        return {"finger": finger, "game": game, "state": "crown", "unexpected": 0,
                "pauses": 0, "paused_ticks": 0, "target": None, "age": 0}

    for line in open(instants_path):
        rec = json.loads(line)
        t = rec["instant"]
        em = rec["emitted"]
        crowns = [v["finger"] for v in em.get("showCrown", [])]
        shown = list(em.get("showTarget", []))
        hides = [v["reason"] for v in em.get("hideTarget", [])]
        if "gameStarted" in em:
            game = em["gameStarted"][0]["game"]
        if "gamePaused" in em:
            trial["pauses"] += 1
            pause_start = t
            paused = True
        else:
            if paused and "gameResumed" in em:
                trial["paused_ticks"] += t - pause_start
                paused = False
            if not paused:
                if trial is None and crowns:
                    trial = open_trial(crowns.pop(0), t)
                elif trial is not None and trial["state"] == "target":
                    trial["age"] += 1
                downs = sorted(em.get("contactDown", []), key=lambda d: d["seq"])
                for d in downs:
                    if trial is None:
                        break
                    z = zone(layout, d["x"], d["y"])
                    if trial["state"] == "crown" and z == "crown":
                        target = shown.pop(0)
                        assert target["motion"]["kind"] == "static"
                        trial.update(state="target", target=target, age=0)
                    elif trial["state"] == "crown" and z == "play":
                        trial["unexpected"] += 1
                    elif trial["state"] == "target" and z == "play":
                        c, r = trial["target"]["center"], trial["target"]["radius"]
                        if math.hypot(d["x"] - c["x"], d["y"] - c["y"]) <= r:
                            assert hides.pop(0) == "hit"
                            trials.append(dict(trial, outcome="hit",
                                               reaction_ms=trial["age"] * 1000 / hz))
                            trial = open_trial(crowns.pop(0), t)
                        else:
                            trial["unexpected"] += 1
                if trial is not None and trial["state"] == "target":
                    limit = -(-timeouts_ms[trial["game"]] * hz // 1000)
                    if trial["age"] >= limit:
                        assert hides.pop(0) == "timeout"
                        trials.append(dict(trial, outcome="timeout"))
                        trial = open_trial(crowns.pop(0), t)
        if "gameFinished" in em:
            trial = None
            paused = False
            crowns = []
        assert not shown and not crowns, f"unexplained UI events at instant {t}"

    per_finger = {}
    per_game = {}
    reactions = {}
    pauses = {"count": 0, "total_paused_ticks": 0}
    unexpected = 0
    for tr in trials:
        f = per_finger.setdefault(tr["finger"], {"trials": 0, "hits": 0})
        g = per_game.setdefault(tr["game"], {"trials": 0, "hits": 0, "timeouts": 0})
        f["trials"] += 1
        g["trials"] += 1
        if tr["outcome"] == "hit":
            f["hits"] += 1
            g["hits"] += 1
            reactions.setdefault(tr["finger"], []).append(tr["reaction_ms"])
        else:
            g["timeouts"] += 1
        pauses["count"] += tr["pauses"]
        pauses["total_paused_ticks"] += tr["paused_ticks"]
        unexpected += tr["unexpected"]
    for name, f in per_finger.items():
        rs = reactions.get(name, [])
        total = 0.0
        for r in rs:
            total += r
        f["mean_reaction_ms"] = total / len(rs) if rs else None
        f["median_reaction_ms"] = sorted(rs)[(len(rs) - 1) // 2] if rs else None
    for g in per_game.values():
        q = Fraction(g["hits"], g["trials"])
        g["hit_rate"] = [q.numerator, q.denominator]
    out = {
        "per_finger": per_finger,
        "per_game": per_game,
        "pauses": pauses,
        "unexpected_contacts": unexpected,
        "trial_count": len(trials),
    }
    json.dump(out, sys.stdout, indent=1, sort_keys=True)
    print()


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
