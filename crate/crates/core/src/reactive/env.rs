//! Per-instant event environment and the views handed to host callbacks.

use std::collections::HashMap;

use super::{EventId, MachineError, Payload};

/// What a reader sees for one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventStatus<'a> {
    /// Not generated so far in this instant. Only visible mid-instant.
    Unknown,
    /// Generated in this instant, with its value list.
    Present(&'a [Payload]),
    /// Resolved absent at the end of the instant.
    Absent,
}

impl EventStatus<'_> {
    pub fn is_present(&self) -> bool {
        matches!(self, EventStatus::Present(_))
    }
}

#[derive(Debug, Default)]
pub(crate) struct EventTable {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl EventTable {
    pub(crate) fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }

    pub(crate) fn lookup(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub(crate) fn name(&self, index: u32) -> &str {
        &self.names[index as usize]
    }

    pub(crate) fn len(&self) -> usize {
        self.names.len()
    }
}

#[derive(Debug, Default)]
struct Slot {
    // instant + 1 of the last instant in which the event was present
    stamp: u64,
    values: Vec<Payload>,
    sealed: bool,
}

pub(crate) enum GenerateOutcome {
    NewlyPresent,
    AlreadyPresent,
    /// The value list was already read this instant; the value was dropped.
    Sealed,
}

#[derive(Debug, Default)]
pub(crate) struct Environment {
    slots: Vec<Slot>,
    instant: u64,
    present: Vec<u32>,
}

impl Environment {
    pub(crate) fn begin(&mut self, instant: u64, events: usize) {
        self.instant = instant;
        self.present.clear();
        if self.slots.len() < events {
            self.slots.resize_with(events, Slot::default);
        }
    }

    fn ensure(&mut self, index: u32) -> &mut Slot {
        let i = index as usize;
        if self.slots.len() <= i {
            self.slots.resize_with(i + 1, Slot::default);
        }
        &mut self.slots[i]
    }

    pub(crate) fn is_present(&self, index: u32) -> bool {
        self.slots
            .get(index as usize)
            .is_some_and(|s| s.stamp == self.instant + 1)
    }

    pub(crate) fn generate(&mut self, index: u32, value: Option<Payload>) -> GenerateOutcome {
        let stamp = self.instant + 1;
        let slot = self.ensure(index);
        let newly = slot.stamp != stamp;
        if newly {
            slot.stamp = stamp;
            slot.values.clear();
            slot.sealed = false;
        }
        let outcome = match value {
            Some(_) if slot.sealed => GenerateOutcome::Sealed,
            Some(v) => {
                slot.values.push(v);
                GenerateOutcome::AlreadyPresent
            }
            None => GenerateOutcome::AlreadyPresent,
        };
        if newly {
            self.present.push(index);
            return GenerateOutcome::NewlyPresent;
        }
        outcome
    }

    /// Mid-instant read. Reading a present event's values seals its list.
    pub(crate) fn read(&mut self, index: u32) -> EventStatus<'_> {
        let stamp = self.instant + 1;
        match self.slots.get_mut(index as usize) {
            Some(slot) if slot.stamp == stamp => {
                slot.sealed = true;
                EventStatus::Present(&slot.values)
            }
            _ => EventStatus::Unknown,
        }
    }

    /// End-of-instant read.
    pub(crate) fn frozen(&self, index: u32) -> EventStatus<'_> {
        if self.is_present(index) {
            EventStatus::Present(&self.slots[index as usize].values)
        } else {
            EventStatus::Absent
        }
    }

    pub(crate) fn present_events(&self) -> &[u32] {
        &self.present
    }
}

/// Maps an event id to the instance visible in the current scope.
pub(crate) fn resolve(
    machine: u32,
    table: &EventTable,
    scope: &[(EventId, EventId)],
    event: EventId,
) -> Result<u32, MachineError> {
    if event.machine != machine || event.index as usize >= table.len() {
        return Err(MachineError::UnknownEvent(event));
    }
    Ok(scope
        .iter()
        .rev()
        .find(|(outer, _)| *outer == event)
        .map_or(event.index, |(_, inner)| inner.index))
}

/// Context of an in-line [`Atom`](super::Program::atom) or payload producer.
pub struct ActionCtx<'a> {
    pub(crate) env: &'a mut Environment,
    pub(crate) table: &'a EventTable,
    pub(crate) scope: &'a [(EventId, EventId)],
    pub(crate) machine: u32,
    pub(crate) moved: &'a mut bool,
    pub(crate) sealed_writes: &'a mut Vec<u32>,
}

impl ActionCtx<'_> {
    /// Index of the instant being executed.
    pub fn instant(&self) -> u64 {
        self.env.instant
    }

    /// Presence without touching the value list.
    pub fn is_present(&self, event: EventId) -> Result<bool, MachineError> {
        let i = resolve(self.machine, self.table, self.scope, event)?;
        Ok(self.env.is_present(i))
    }

    /// Current status of `event`. Reading a present event freezes its value
    /// list for the rest of the instant, so every reader sees the same list.
    pub fn status(&mut self, event: EventId) -> Result<EventStatus<'_>, MachineError> {
        let i = resolve(self.machine, self.table, self.scope, event)?;
        Ok(self.env.read(i))
    }

    /// The value list of `event` if it is present; `None` while unknown.
    pub fn read_values(&mut self, event: EventId) -> Result<Option<&[Payload]>, MachineError> {
        Ok(match self.status(event)? {
            EventStatus::Present(values) => Some(values),
            _ => None,
        })
    }

    /// Generates `event` in the current instant.
    pub fn generate(&mut self, event: EventId, value: Option<Payload>) -> Result<(), MachineError> {
        let i = resolve(self.machine, self.table, self.scope, event)?;
        match self.env.generate(i, value) {
            GenerateOutcome::NewlyPresent => *self.moved = true,
            GenerateOutcome::AlreadyPresent => {}
            GenerateOutcome::Sealed => self.sealed_writes.push(i),
        }
        Ok(())
    }

    pub fn event_name(&self, event: EventId) -> Result<&str, MachineError> {
        let i = resolve(self.machine, self.table, self.scope, event)?;
        Ok(self.table.name(i))
    }
}

/// Read-only view of a completed instant.
pub struct FrozenEnv<'a> {
    pub(crate) env: &'a Environment,
    pub(crate) table: &'a EventTable,
    pub(crate) scope: &'a [(EventId, EventId)],
    pub(crate) machine: u32,
}

impl FrozenEnv<'_> {
    pub fn instant(&self) -> u64 {
        self.env.instant
    }

    pub fn status(&self, event: EventId) -> Result<EventStatus<'_>, MachineError> {
        let i = resolve(self.machine, self.table, self.scope, event)?;
        Ok(self.env.frozen(i))
    }

    pub fn read_values(&self, event: EventId) -> Result<Option<&[Payload]>, MachineError> {
        Ok(match self.status(event)? {
            EventStatus::Present(values) => Some(values),
            _ => None,
        })
    }

    pub fn event_name(&self, event: EventId) -> Result<&str, MachineError> {
        let i = resolve(self.machine, self.table, self.scope, event)?;
        Ok(self.table.name(i))
    }
}
