//! Randomized session configs, player models and touch-trace faults.

use danse_core::game::{load_config, SessionConfig};
use danse_core::replay::{BehaviorModel, HoldReliability, Latency, Accuracy};
use danse_core::touch::Phase;
use danse_core::TouchSample;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};

/// Sky config with random hand, seed, order and per-game target settings.
pub fn random_config<R: Rng>(rng: &mut R, duration_s: f64) -> SessionConfig {
    let mut v: Value = serde_json::from_slice(&std::fs::read(super::fixture("sky.config.json")).unwrap()).unwrap();
    let left = rng.random_bool(0.5);
    let cx = if left { 0.385 } else { 0.615 };
    v["trained_hand"] = json!(if left { "left" } else { "right" });
    v["rng_seed"] = json!(rng.random::<u64>());
    let names = ["clouds", "flakes", "sun", "rain"];
    v["first_game"] = json!(names.choose(rng).unwrap());
    for g in v["subthemes"][0]["games"].as_array_mut().unwrap() {
        g["duration_s"] = json!(duration_s);
        g["timeout_ms"] = json!(rng.random_range(800..4000));
        if rng.random_bool(0.7) {
            g["target_radius"] = json!([0.06, 0.045, 0.03, 0.02].choose(rng).unwrap());
        }
        g["motion"] = match rng.random_range(0..3) {
            0 => json!({ "kind": "static" }),
            1 => json!({
                "kind": "linear",
                "velocity": { "x": rng.random_range(-0.2..0.2), "y": rng.random_range(-0.2..0.2) },
                "bounce": rng.random_bool(0.8),
            }),
            _ => json!({
                "kind": "circular",
                "center": { "x": cx, "y": 0.37 },
                "radius": rng.random_range(0.05..0.2),
                "angular_velocity": rng.random_range(-2.0..2.0),
            }),
        };
    }
    load_config(&serde_json::to_vec(&v).unwrap()).unwrap()
}

pub fn random_model<R: Rng>(rng: &mut R) -> BehaviorModel {
    let min_ms = rng.random_range(150..400);
    BehaviorModel {
        seed: rng.random(),
        latency: Latency::Uniform {
            min_ms,
            max_ms: min_ms + rng.random_range(0..2500),
        },
        accuracy: Accuracy {
            hit_probability: rng.random_range(0.4..=1.0),
            miss_scatter: rng.random_range(0.01..0.1),
        },
        hold: HoldReliability {
            drop_per_minute: rng.random_range(0.0..6.0),
            drop_duration_ms: rng.random_range(300..3000),
        },
    }
}

fn sample(t_ms: u64, id: u32, phase: Phase, x: f64, y: f64) -> TouchSample {
    TouchSample { t_ms, pointer_id: id, phase, x, y }
}

/// Adds `count` random faults to `samples`: sign lifts and slides, duplicate
/// downs, orphan moves and ups, out-of-bounds samples and stray contacts.
pub fn inject_faults<R: Rng>(rng: &mut R, samples: &[TouchSample], count: usize) -> Vec<TouchSample> {
    let mut out = samples.to_vec();
    let end = samples.iter().map(|s| s.t_ms).max().unwrap_or(0);
    // Sign fingers are the first two downs, held until the very end.
    let signs: Vec<&TouchSample> = samples.iter().filter(|s| s.phase == Phase::Down).take(2).collect();
    let mut fresh = 10_000u32;
    for _ in 0..count {
        let t = rng.random_range(0..end.max(1));
        let d = rng.random_range(1..2000).min(end.saturating_sub(t + 1)).max(1);
        let sign = *signs.choose(rng).unwrap();
        let (id, x, y) = (sign.pointer_id, sign.x, sign.y);
        match rng.random_range(0..7) {
            0 => {
                out.push(sample(t, id, Phase::Up, x, y));
                out.push(sample(t + d, id, Phase::Down, x, y));
            }
            1 => {
                out.push(sample(t, id, Phase::Move, rng.random(), rng.random()));
                out.push(sample(t + d, id, Phase::Move, x, y));
            }
            2 => out.push(sample(t, id, Phase::Down, rng.random(), rng.random())),
            3 => out.push(sample(t, fresh + 1_000_000, Phase::Move, rng.random(), rng.random())),
            4 => out.push(sample(t, fresh + 1_000_000, Phase::Up, rng.random(), rng.random())),
            5 => out.push(sample(t, id, Phase::Move, rng.random_range(1.0..2.0), y)),
            _ => {
                let (sx, sy) = (rng.random(), rng.random());
                out.push(sample(t, fresh, Phase::Down, sx, sy));
                out.push(sample(t + d, fresh, Phase::Up, sx, sy));
            }
        }
        fresh += 1;
    }
    out.sort_by_key(|s| s.t_ms);
    out
}
