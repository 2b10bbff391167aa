//! Reactive program trees.
//!
//! A [`Program`] is an immutable, cheaply clonable tree of instructions. The
//! machine builds fresh execution state from it every time a subtree is
//! (re)started, so the same program value can be shared by loops and by
//! several machines' worth of builders.

use std::fmt;
use std::sync::Arc;

use super::env::{ActionCtx, FrozenEnv};
use super::{EventId, Payload};

/// Host callback executed in-line during an instant.
pub type Action = Arc<dyn Fn(&mut ActionCtx<'_>) -> Result<(), ActionError> + Send + Sync>;

/// Host callback executed once the instant is over, against the frozen environment.
pub type Observer = Arc<dyn Fn(&FrozenEnv<'_>) -> Result<(), ActionError> + Send + Sync>;

/// Computes the payload attached by a `Generate` instruction.
pub type Producer = Arc<dyn Fn(&mut ActionCtx<'_>) -> Payload + Send + Sync>;

/// Failure reported by a host callback. Terminates the enclosing branch only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionError(String);

impl ActionError {
    pub fn new(message: impl Into<String>) -> Self {
        ActionError(message.into())
    }

    pub fn message(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for ActionError {
    fn from(err: E) -> Self {
        ActionError(err.to_string())
    }
}

pub(crate) enum Instr {
    Nothing,
    Atom(Action),
    Observe(Observer),
    Pause,
    Seq(Program, Program),
    Par(Vec<Program>),
    Loop(Program),
    Repeat(u64, Program),
    Generate(EventId, Option<Producer>),
    Await(EventId),
    WhenPresentElse(EventId, Program, Program),
    Until(EventId, Program, Program),
    LocalEvent(EventId, Program),
}

/// A reactive program: a finite combinator tree executed over logical instants.
#[derive(Clone)]
pub struct Program(pub(crate) Arc<Instr>);

impl Program {
    fn from_instr(instr: Instr) -> Self {
        Program(Arc::new(instr))
    }

    /// Terminates immediately.
    pub fn nothing() -> Self {
        Self::from_instr(Instr::Nothing)
    }

    /// Runs `action` when reached. The action may read the environment and
    /// generate events through its context.
    pub fn atom<F>(action: F) -> Self
    where
        F: Fn(&mut ActionCtx<'_>) -> Result<(), ActionError> + Send + Sync + 'static,
    {
        Self::from_instr(Instr::Atom(Arc::new(action)))
    }

    /// Terminates immediately and schedules `observer` to run at the end of the
    /// current instant, once every event has its final status and value list.
    /// Observers cannot generate events.
    pub fn observe<F>(observer: F) -> Self
    where
        F: Fn(&FrozenEnv<'_>) -> Result<(), ActionError> + Send + Sync + 'static,
    {
        Self::from_instr(Instr::Observe(Arc::new(observer)))
    }

    /// Stops for the current instant and terminates at the next one.
    pub fn pause() -> Self {
        Self::from_instr(Instr::Pause)
    }

    pub fn seq(first: Program, second: Program) -> Self {
        Self::from_instr(Instr::Seq(first, second))
    }

    /// Right-nested sequence of `programs`; `nothing()` when empty.
    pub fn seq_all<I: IntoIterator<Item = Program>>(programs: I) -> Self {
        let mut items: Vec<Program> = programs.into_iter().collect();
        let mut acc = match items.pop() {
            Some(last) => last,
            None => return Self::nothing(),
        };
        while let Some(prev) = items.pop() {
            acc = Self::seq(prev, acc);
        }
        acc
    }

    /// Runs every branch in the same instants; terminates when all have.
    pub fn par<I: IntoIterator<Item = Program>>(branches: I) -> Self {
        Self::from_instr(Instr::Par(branches.into_iter().collect()))
    }

    /// Restarts `body` each time it terminates. The body must not terminate
    /// twice in the same instant.
    pub fn forever(body: Program) -> Self {
        Self::from_instr(Instr::Loop(body))
    }

    pub fn repeat(count: u64, body: Program) -> Self {
        Self::from_instr(Instr::Repeat(count, body))
    }

    /// Makes `event` present without adding a value.
    pub fn generate(event: EventId) -> Self {
        Self::from_instr(Instr::Generate(event, None))
    }

    /// Makes `event` present and appends `value` to its value list.
    pub fn emit(event: EventId, value: Payload) -> Self {
        Self::generate_with(event, move |_| value.clone())
    }

    /// Makes `event` present with a value computed when the instruction runs.
    pub fn generate_with<F>(event: EventId, producer: F) -> Self
    where
        F: Fn(&mut ActionCtx<'_>) -> Payload + Send + Sync + 'static,
    {
        Self::from_instr(Instr::Generate(event, Some(Arc::new(producer))))
    }

    /// Waits until `event` is present; terminates in that same instant.
    pub fn await_event(event: EventId) -> Self {
        Self::from_instr(Instr::Await(event))
    }

    /// Runs `then` immediately if `event` is present during this instant,
    /// otherwise runs `otherwise` from the next instant on.
    pub fn when_present_else(event: EventId, then: Program, otherwise: Program) -> Self {
        Self::from_instr(Instr::WhenPresentElse(event, then, otherwise))
    }

    /// Weak preemption: runs `body` until an instant in which `event` is present
    /// and the body did not terminate; `handler` then runs from the next instant.
    pub fn until(event: EventId, body: Program, handler: Program) -> Self {
        Self::from_instr(Instr::Until(event, body, handler))
    }

    /// Gives `body` a fresh instance of `event`, shadowing any outer event of
    /// the same name.
    pub fn local(event: EventId, body: Program) -> Self {
        Self::from_instr(Instr::LocalEvent(event, body))
    }

    pub(crate) fn instr(&self) -> &Instr {
        &self.0
    }

    /// Every event id referenced by the tree.
    pub(crate) fn for_each_event(&self, f: &mut dyn FnMut(EventId)) {
        match self.instr() {
            Instr::Nothing | Instr::Atom(_) | Instr::Observe(_) | Instr::Pause => {}
            Instr::Seq(a, b) => {
                a.for_each_event(f);
                b.for_each_event(f);
            }
            Instr::Par(branches) => branches.iter().for_each(|b| b.for_each_event(f)),
            Instr::Loop(body) | Instr::Repeat(_, body) => body.for_each_event(f),
            Instr::Generate(e, _) | Instr::Await(e) => f(*e),
            Instr::WhenPresentElse(e, a, b) | Instr::Until(e, a, b) => {
                f(*e);
                a.for_each_event(f);
                b.for_each_event(f);
            }
            Instr::LocalEvent(e, body) => {
                f(*e);
                body.for_each_event(f);
            }
        }
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.instr() {
            Instr::Nothing => f.write_str("Nothing"),
            Instr::Atom(_) => f.write_str("Atom"),
            Instr::Observe(_) => f.write_str("Observe"),
            Instr::Pause => f.write_str("Pause"),
            Instr::Seq(a, b) => f.debug_tuple("Seq").field(a).field(b).finish(),
            Instr::Par(branches) => f.debug_tuple("Par").field(branches).finish(),
            Instr::Loop(body) => f.debug_tuple("Loop").field(body).finish(),
            Instr::Repeat(n, body) => f.debug_tuple("Repeat").field(n).field(body).finish(),
            Instr::Generate(e, p) => f
                .debug_tuple("Generate")
                .field(e)
                .field(&p.is_some())
                .finish(),
            Instr::Await(e) => f.debug_tuple("Await").field(e).finish(),
            Instr::WhenPresentElse(e, a, b) => f
                .debug_tuple("WhenPresentElse")
                .field(e)
                .field(a)
                .field(b)
                .finish(),
            Instr::Until(e, a, b) => f.debug_tuple("Until").field(e).field(a).field(b).finish(),
            Instr::LocalEvent(e, body) => f.debug_tuple("LocalEvent").field(e).field(body).finish(),
        }
    }
}
