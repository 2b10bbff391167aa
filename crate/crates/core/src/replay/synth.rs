//! Synthetic traces from a simulated player.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::driver::SessionRun;
use super::trace::{quantize_tick, tick_ms};
use crate::game::events::{PhaseName, PhaseReport, ShowTarget};
use crate::game::{
    session_rng, target_hit_test, trajectory_position, ConfigError, HitTest, SessionConfig, SessionEvents,
    SessionRng, Target,
};
use crate::geometry::Point;
use crate::touch::{Phase, TouchSample};

/// How long a tapping finger stays down.
pub const TAP_HOLD_MS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum Latency {
    Fixed { ms: u64 },
    Uniform { min_ms: u64, max_ms: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Accuracy {
    pub hit_probability: f64,
    /// How far beyond the rim a missed tap may land.
    pub miss_scatter: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy {
            hit_probability: 1.0,
            miss_scatter: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HoldReliability {
    pub drop_per_minute: f64,
    pub drop_duration_ms: u64,
}

impl Default for HoldReliability {
    fn default() -> Self {
        HoldReliability {
            drop_per_minute: 0.0,
            drop_duration_ms: 1500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorModel {
    pub seed: u64,
    pub latency: Latency,
    #[serde(default)]
    pub accuracy: Accuracy,
    #[serde(default)]
    pub hold: HoldReliability,
}

impl BehaviorModel {
    /// Fixed 300 ms latency, always on target, never lets go.
    pub fn perfect(seed: u64) -> Self {
        BehaviorModel {
            seed,
            latency: Latency::Fixed { ms: 300 },
            accuracy: Accuracy::default(),
            hold: HoldReliability::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Latency::Uniform { min_ms, max_ms } = self.latency {
            if min_ms > max_ms {
                return Err(ConfigError::new("latency", "min_ms exceeds max_ms"));
            }
        }
        let p = self.accuracy.hit_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfigError::new("accuracy.hit_probability", "must lie in [0, 1]"));
        }
        if !(self.accuracy.miss_scatter >= 0.0 && self.accuracy.miss_scatter.is_finite()) {
            return Err(ConfigError::new("accuracy.miss_scatter", "must be non-negative"));
        }
        let d = self.hold.drop_per_minute;
        if !(0.0..=1.0).contains(&d) {
            return Err(ConfigError::new("hold.drop_per_minute", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn load_model(bytes: &[u8]) -> Result<BehaviorModel, ConfigError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let model: BehaviorModel = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." || path == "?" { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone)]
enum Pending {
    CrownTap,
    TargetTap,
    Lift { id: u32, at: Point<f64>, sign: Option<usize> },
    SignDown { sign: usize },
}

impl Pending {
    fn is_tap(&self) -> bool {
        matches!(self, Pending::CrownTap | Pending::TargetTap)
    }
}

enum Prompt {
    None,
    Crown,
    Target { target: Target<f64>, age: u64 },
}

struct Player {
    model: BehaviorModel,
    rng: SessionRng,
    hz: u32,
    signs: [Point<f64>; 2],
    sign_ids: [Option<u32>; 2],
    crown: Point<f64>,
    next_id: u32,
    pending: BTreeMap<u64, Vec<Pending>>,
    prompt: Prompt,
    dropping: bool,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

impl Player {
    fn schedule(&mut self, tick: u64, p: Pending) {
        self.pending.entry(tick).or_default().push(p);
    }

    fn latency_ticks(&mut self) -> u64 {
        let ms = match self.model.latency {
            Latency::Fixed { ms } => ms,
            Latency::Uniform { min_ms, max_ms } => self.rng.random_range(min_ms..=max_ms),
        };
        quantize_tick(ms, self.hz).max(1)
    }

    fn clear_taps(&mut self) {
        for list in self.pending.values_mut() {
            list.retain(|p| !p.is_tap());
        }
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Where a tap on `target` lands when its age is `age`.
    fn aim(&mut self, target: &Target<f64>, age: u64, play: &crate::geometry::Rect<f64>) -> Point<f64> {
        let exact = trajectory_position(target, age);
        if self.rng.random::<f64>() < self.model.accuracy.hit_probability {
            let rounded = Point::new(round4(exact.x), round4(exact.y));
            return if target_hit_test(target, age, rounded) == HitTest::Hit {
                rounded
            } else {
                exact
            };
        }
        for _ in 0..16 {
            let theta = self.rng.random::<f64>() * std::f64::consts::TAU;
            let gap = 1e-3 + self.rng.random::<f64>() * self.model.accuracy.miss_scatter;
            let d = target.radius + gap;
            let p = Point::new(round4(exact.x + d * theta.cos()), round4(exact.y + d * theta.sin()));
            if play.contains(p) && target_hit_test(target, age, p) == HitTest::Miss {
                return p;
            }
        }
        let corners = [
            Point::new(play.left, play.top),
            Point::new(play.right, play.top),
            Point::new(play.left, play.bottom),
            Point::new(play.right, play.bottom),
        ];
        corners
            .into_iter()
            .max_by(|a, b| a.distance(exact).total_cmp(&b.distance(exact)))
            .expect("four corners")
    }
}

/// Plays `config` with a simulated player and returns the touch trace.
/// The same config and model always give the same trace.
pub fn synth_trace(config: &SessionConfig, model: &BehaviorModel) -> Vec<TouchSample<f64>> {
    let hz = config.tick_hz;
    let layout = &config.layout;
    let mut run = SessionRun::new(config, false);
    let crown = layout
        .crown_zone
        .map(|c| c.center())
        .unwrap_or_else(|| layout.play_area.center());
    let mut player = Player {
        model: *model,
        rng: session_rng(model.seed),
        hz,
        signs: [layout.sign_zones[0].center(), layout.sign_zones[1].center()],
        sign_ids: [None, None],
        crown,
        next_id: 0,
        pending: BTreeMap::new(),
        prompt: Prompt::None,
        dropping: false,
    };
    player.schedule(0, Pending::SignDown { sign: 0 });
    player.schedule(0, Pending::SignDown { sign: 1 });

    let budget: u64 = config
        .games_in_order()
        .iter()
        .map(|g| g.duration_ticks(hz) + 1)
        .sum();
    let cap = budget * 4 + 2;
    let tap_hold = quantize_tick(TAP_HOLD_MS, hz).max(1);
    let drop_ticks = quantize_tick(model.hold.drop_duration_ms, hz).max(1);
    let drop_per_tick = model.hold.drop_per_minute / (60.0 * hz as f64);

    let mut out = Vec::new();
    let emit = |run: &mut SessionRun, out: &mut Vec<TouchSample<f64>>, tick: u64, id: u32, phase: Phase, at: Point<f64>| {
        let s = TouchSample {
            t_ms: tick_ms(tick, hz),
            pointer_id: id,
            phase,
            x: at.x,
            y: at.y,
        };
        run.ingest(&s).expect("gateway events are declared");
        out.push(s);
    };

    loop {
        let tick = run.instant_index();
        for action in player.pending.remove(&tick).unwrap_or_default() {
            match action {
                Pending::SignDown { sign } => {
                    let id = player.fresh_id();
                    player.sign_ids[sign] = Some(id);
                    player.dropping = false;
                    emit(&mut run, &mut out, tick, id, Phase::Down, player.signs[sign]);
                }
                Pending::Lift { id, at, sign } => {
                    if let Some(i) = sign {
                        player.sign_ids[i] = None;
                    }
                    emit(&mut run, &mut out, tick, id, Phase::Up, at);
                }
                Pending::CrownTap => {
                    let id = player.fresh_id();
                    let at = player.crown;
                    emit(&mut run, &mut out, tick, id, Phase::Down, at);
                    player.schedule(tick + tap_hold, Pending::Lift { id, at, sign: None });
                }
                Pending::TargetTap => {
                    if let Prompt::Target { target, age } = player.prompt {
                        // The controller ages the target before testing hits.
                        let at = player.aim(&target, age + 1, &layout.play_area);
                        let id = player.fresh_id();
                        emit(&mut run, &mut out, tick, id, Phase::Down, at);
                        player.schedule(tick + tap_hold, Pending::Lift { id, at, sign: None });
                    }
                }
            }
        }

        let report = run.step();
        if run.is_finished() || tick + 1 >= cap {
            let end = tick + 1;
            for (i, id) in player.sign_ids.iter().enumerate() {
                if let Some(id) = id {
                    let s = TouchSample {
                        t_ms: tick_ms(end, hz),
                        pointer_id: *id,
                        phase: Phase::Up,
                        x: player.signs[i].x,
                        y: player.signs[i].y,
                    };
                    out.push(s);
                }
            }
            break;
        }

        let present = |name: &str| report.is_present(name);
        let phase = report
            .values(SessionEvents::PHASE)
            .and_then(|v| v.first())
            .and_then(|v| serde_json::from_value::<PhaseReport>(v.clone()).ok())
            .map(|p| p.state);
        if let Prompt::Target { age, .. } = &mut player.prompt {
            if phase == Some(PhaseName::TargetActive) && !present(SessionEvents::SHOW_TARGET) {
                *age += 1;
            }
        }
        if present(SessionEvents::HIDE_TARGET)
            || present(SessionEvents::GAME_PAUSED)
            || present(SessionEvents::GAME_FINISHED)
        {
            player.clear_taps();
            if !present(SessionEvents::GAME_PAUSED) {
                player.prompt = Prompt::None;
            }
        }
        if let Some(values) = report.values(SessionEvents::SHOW_CROWN) {
            if !values.is_empty() {
                player.prompt = Prompt::Crown;
                let at = tick + player.latency_ticks();
                player.schedule(at, Pending::CrownTap);
            }
        }
        if let Some(v) = report.values(SessionEvents::SHOW_TARGET).and_then(|v| v.last()) {
            let shown: ShowTarget = serde_json::from_value(v.clone()).expect("showTarget payload");
            let target = Target {
                center: shown.center,
                radius: shown.radius,
                motion: shown.motion,
                spawn_instant: tick,
            };
            player.prompt = Prompt::Target { target, age: 0 };
            let at = tick + player.latency_ticks();
            player.schedule(at, Pending::TargetTap);
        }
        if present(SessionEvents::GAME_RESUMED) && !present(SessionEvents::GAME_PAUSED) {
            let retry = match player.prompt {
                Prompt::Crown => Some(Pending::CrownTap),
                Prompt::Target { .. } => Some(Pending::TargetTap),
                Prompt::None => None,
            };
            if let Some(p) = retry {
                let at = tick + player.latency_ticks();
                player.schedule(at, p);
            }
        }

        let both_down = player.sign_ids.iter().all(Option::is_some);
        if both_down && !player.dropping && drop_per_tick > 0.0 && player.rng.random::<f64>() < drop_per_tick {
            let sign = player.rng.random_range(0..2usize);
            let id = player.sign_ids[sign].expect("sign is down");
            player.dropping = true;
            player.schedule(tick + 1, Pending::Lift { id, at: player.signs[sign], sign: Some(sign) });
            player.schedule(tick + 1 + drop_ticks, Pending::SignDown { sign });
        }
    }
    out
}
