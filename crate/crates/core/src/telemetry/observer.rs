//! Recorder programs that listen to events without affecting the game.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::game::TrialRecord;
use crate::reactive::{ActionError, EventId, Payload, Program};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedEvent {
    pub instant: u64,
    pub event: String,
    pub values: Vec<Payload>,
}

/// Shared buffer filled by an observer program.
#[derive(Debug, Clone, Default)]
pub struct RecordBuffer(Arc<Mutex<Vec<ObservedEvent>>>);

impl RecordBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> Vec<ObservedEvent> {
        self.0.lock().map(|v| v.clone()).unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.0.lock().map(|v| v.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every recorded value of `event` decoded as a trial record.
    pub fn trials(&self, event: &str) -> Result<Vec<TrialRecord>, serde_json::Error> {
        let mut out = Vec::new();
        for o in self.snapshot().into_iter().filter(|o| o.event == event) {
            for v in o.values {
                out.push(serde_json::from_value(v)?);
            }
        }
        Ok(out)
    }
}

/// One branch per event: wait for it, record its final value list at the end
/// of the instant, pause. An empty event set yields an inert program.
pub fn build_observer_program(events: &[EventId], buffer: &RecordBuffer) -> Program {
    if events.is_empty() {
        return Program::nothing();
    }
    Program::par(events.iter().map(|&event| {
        let buffer = buffer.clone();
        Program::forever(Program::seq_all([
            Program::await_event(event),
            Program::observe(move |env| {
                let values = env.read_values(event)?.unwrap_or_default().to_vec();
                let name = env.event_name(event)?.to_owned();
                buffer
                    .0
                    .lock()
                    .map_err(|_| ActionError::new("record buffer poisoned"))?
                    .push(ObservedEvent {
                        instant: env.instant(),
                        event: name,
                        values,
                    });
                Ok(())
            }),
            Program::pause(),
        ]))
    }))
}
