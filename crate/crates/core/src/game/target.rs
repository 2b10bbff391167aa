//! Targets: spawning, trajectories and hit tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{GameConfig, MotionSpec};
use super::finger::SessionRng;
use crate::geometry::{Point, Rect};
use crate::scalar::Scalar;

/// Spawn attempts before falling back to the farthest candidate.
pub const MAX_SPAWN_ATTEMPTS: usize = 64;

/// Motion of a spawned target; speeds are per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MotionState<T> {
    Static,
    /// Moves inside `bounds`, reflecting off its sides or stopping at them.
    Linear {
        velocity: Point<T>,
        bounce: bool,
        bounds: Rect<T>,
    },
    Circular {
        center: Point<T>,
        radius: T,
        /// Angle at spawn, radians.
        phase: T,
        angular_velocity: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target<T> {
    /// Position at spawn.
    pub center: Point<T>,
    pub radius: T,
    pub motion: MotionState<T>,
    pub spawn_instant: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitTest {
    Hit,
    Miss,
}

/// Position `ticks` after spawn.
pub fn trajectory_position<T: Scalar>(target: &Target<T>, ticks: u64) -> Point<T> {
    let t = T::from_u64(ticks).expect("tick count fits the scalar type");
    match target.motion {
        MotionState::Static => target.center,
        MotionState::Linear {
            velocity,
            bounce: true,
            bounds,
        } => Point::new(
            fold(target.center.x + velocity.x * t, bounds.left, bounds.right),
            fold(target.center.y + velocity.y * t, bounds.top, bounds.bottom),
        ),
        MotionState::Linear {
            velocity,
            bounce: false,
            bounds,
        } => bounds.clamp(Point::new(
            target.center.x + velocity.x * t,
            target.center.y + velocity.y * t,
        )),
        MotionState::Circular {
            center,
            radius,
            phase,
            angular_velocity,
        } => {
            let theta = phase + angular_velocity * t;
            Point::new(center.x + radius * theta.cos(), center.y + radius * theta.sin())
        }
    }
}

/// Triangle wave: reflects `u` back into `[lo, hi]`.
fn fold<T: Scalar>(u: T, lo: T, hi: T) -> T {
    let span = hi - lo;
    if span <= T::zero() {
        return lo;
    }
    let period = span + span;
    let mut m = (u - lo) - ((u - lo) / period).floor() * period;
    if m > span {
        m = period - m;
    }
    (lo + m).max(lo).min(hi)
}

/// Closed disc test against the position `ticks` after spawn.
pub fn target_hit_test<T: Scalar>(target: &Target<T>, ticks: u64, contact: Point<T>) -> HitTest {
    if trajectory_position(target, ticks).distance(contact) <= target.radius {
        HitTest::Hit
    } else {
        HitTest::Miss
    }
}

pub fn progress_fraction<T: Scalar>(active_ticks: u64, duration_ticks: u64) -> T {
    if duration_ticks == 0 {
        return T::one();
    }
    let f = T::from_u64(active_ticks.min(duration_ticks)).expect("fits")
        / T::from_u64(duration_ticks).expect("fits");
    f.min(T::one())
}

/// Draws a target for `game`. Candidates closer than two radii to the
/// previous target's center are redrawn; after [`MAX_SPAWN_ATTEMPTS`] the
/// farthest candidate is kept.
pub fn spawn_target<T: Scalar>(
    game: &GameConfig,
    play_area: &Rect<T>,
    previous: Option<&Target<T>>,
    tick_hz: u32,
    spawn_instant: u64,
    rng: &mut SessionRng,
) -> Target<T> {
    let radius = T::lit(game.target_radius);
    let bounds = play_area
        .inset(radius)
        .expect("validated config keeps targets inside the play area");
    let hz = T::from_u32(tick_hz).expect("fits");
    let two_pi = T::lit(std::f64::consts::TAU);

    let draw = |rng: &mut SessionRng| -> (Point<T>, MotionState<T>) {
        match game.motion {
            MotionSpec::Static | MotionSpec::Linear { .. } => {
                let u = T::lit(rng.random::<f64>());
                let v = T::lit(rng.random::<f64>());
                let p = Point::new(
                    bounds.left + u * bounds.width(),
                    bounds.top + v * bounds.height(),
                );
                let motion = match game.motion {
                    MotionSpec::Linear { velocity, bounce } => MotionState::Linear {
                        velocity: Point::new(T::lit(velocity.x) / hz, T::lit(velocity.y) / hz),
                        bounce,
                        bounds,
                    },
                    _ => MotionState::Static,
                };
                (p, motion)
            }
            MotionSpec::Circular {
                center,
                radius: orbit,
                angular_velocity,
            } => {
                let phase = T::lit(rng.random::<f64>()) * two_pi;
                let c = Point::new(T::lit(center.x), T::lit(center.y));
                let r = T::lit(orbit);
                let p = Point::new(c.x + r * phase.cos(), c.y + r * phase.sin());
                let motion = MotionState::Circular {
                    center: c,
                    radius: r,
                    phase,
                    angular_velocity: T::lit(angular_velocity) / hz,
                };
                (p, motion)
            }
        }
    };

    let make = |center, motion| Target {
        center,
        radius,
        motion,
        spawn_instant,
    };
    let min_gap = radius + radius;
    let mut best: Option<(T, Point<T>, MotionState<T>)> = None;
    for _ in 0..MAX_SPAWN_ATTEMPTS {
        let (p, motion) = draw(rng);
        let Some(prev) = previous else {
            return make(p, motion);
        };
        let d = p.distance(prev.center);
        if d >= min_gap {
            return make(p, motion);
        }
        if best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
            best = Some((d, p, motion));
        }
    }
    let (_, center, motion) = best.expect("at least one attempt");
    make(center, motion)
}
