//! Headless replay, synthetic players and determinism checks.

pub mod driver;
pub mod synth;
pub mod trace;
pub mod verify;

pub use driver::{game_event_line, instant_cap, replay, replay_with, ReplayOptions, ReplayOutcome, SessionRun, OBSERVED_EVENTS};
pub use synth::{load_model, synth_trace, Accuracy, BehaviorModel, HoldReliability, Latency};
pub use trace::{quantize_tick, read_touch_trace, tick_ms, write_touch_trace, TraceError};
pub use verify::{verify_determinism, Divergence, VerifyReport};
