//! Deterministic synchronous-reactive engine.
//!
//! Programs run in parallel inside a [`Machine`] and advance in logical
//! instants. Within an instant, every branch sees the same presence status
//! for each event, and a present event carries one value list shared by all
//! readers. Absence is only known once the instant can no longer progress,
//! so reactions to absence (the else-branch of
//! [`Program::when_present_else`], the continuation of a body inside
//! [`Program::until`]) take effect at the next instant.
//!
//! Scheduling is a total order: top-level programs in addition order, `par`
//! branches left to right. Branches suspended on an unknown event are retried
//! in that same order after each pass that made a new event present.

mod env;
mod machine;
mod program;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use env::{ActionCtx, EventStatus, FrozenEnv};
pub use machine::{InstantReport, Injector, Machine};
pub use program::{Action, ActionError, Observer, Producer, Program};

/// Opaque payload carried by events.
pub type Payload = serde_json::Value;

/// Interned event identifier, only valid on the machine that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId {
    machine: u32,
    index: u32,
}

/// Stable identifier of a top-level program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProgramHandle(pub u64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("event {0:?} is not known to this machine")]
    UnknownEvent(EventId),
}

/// Errors raised while executing an instant. None of them stop the machine.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ReactionError {
    #[error("program {handle:?}: loop body terminated twice in one instant")]
    InstantaneousLoop { handle: ProgramHandle },
    #[error("program {handle:?}: action failed: {message}")]
    ActionFailure { handle: ProgramHandle, message: String },
    #[error("program {handle:?}: value generated for `{event}` after its list was read")]
    CausalityViolation { handle: ProgramHandle, event: String },
}

#[cfg(test)]
mod tests;
