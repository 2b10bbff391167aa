//! The Danse-doigts game built on the reactive engine.

pub mod config;
pub mod events;
pub mod finger;
pub mod session;
pub mod target;

pub use config::{load_config, ConfigError, GameConfig, MotionSpec, SessionConfig, Subtheme};
pub use events::SessionEvents;
pub use finger::{session_rng, Finger, FingerScheduler, SessionRng};
pub use session::{build_session_program, GamePhase, TrialOutcome, TrialRecord};
pub use target::{progress_fraction, spawn_target, target_hit_test, trajectory_position, HitTest, MotionState, Target};
