//! Headless session replay.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::trace::quantize_tick;
use crate::game::{build_session_program, SessionConfig, SessionEvents};
use crate::reactive::{InstantReport, Machine, MachineError, ProgramHandle, ReactionError};
use crate::telemetry::{build_observer_program, derive_session_id, ObservedEvent, RecordBuffer, SessionStats};
use crate::touch::{sign_hold_status, ContactSet, IngestOutcome, TouchGateway, TouchSample};

/// Events recorded by the telemetry observer.
pub const OBSERVED_EVENTS: [&str; 7] = [
    SessionEvents::TRIAL_RECORD,
    SessionEvents::GAME_STARTED,
    SessionEvents::GAME_FINISHED,
    SessionEvents::GAME_PAUSED,
    SessionEvents::GAME_RESUMED,
    SessionEvents::SESSION_COMPLETE,
    crate::touch::ContactEvents::ANOMALY,
];

/// A machine running one session, fed sample by sample.
pub struct SessionRun {
    config: SessionConfig,
    machine: Machine,
    gateway: TouchGateway,
    events: SessionEvents,
    session: ProgramHandle,
    buffer: Option<RecordBuffer>,
    full_hash: Sha256,
    game_hash: Sha256,
    game_lines: Option<Vec<String>>,
    instants: u64,
    finished: bool,
    anomalies: u64,
    errors: Vec<ReactionError>,
}

impl SessionRun {
    pub fn new(config: &SessionConfig, observe: bool) -> Self {
        let mut machine = Machine::new();
        let events = SessionEvents::declare(&mut machine);
        let session = machine
            .add_program(build_session_program(config, &events))
            .expect("session events are declared on this machine");
        let buffer = observe.then(|| {
            let buffer = RecordBuffer::new();
            let ids: Vec<_> = OBSERVED_EVENTS
                .iter()
                .map(|name| machine.lookup(name).expect("declared"))
                .collect();
            machine
                .add_program(build_observer_program(&ids, &buffer))
                .expect("observer events are declared on this machine");
            buffer
        });
        let gateway = TouchGateway::new(events.contacts, machine.injector());
        SessionRun {
            config: config.clone(),
            machine,
            gateway,
            events,
            session,
            buffer,
            full_hash: Sha256::new(),
            game_hash: Sha256::new(),
            game_lines: None,
            instants: 0,
            finished: false,
            anomalies: 0,
            errors: Vec::new(),
        }
    }

    /// Keeps every game-event line for later comparison.
    pub fn keep_game_lines(&mut self) {
        self.game_lines.get_or_insert_with(Vec::new);
    }

    pub fn set_instant_writer(&mut self, writer: Option<Box<dyn Write + Send>>) {
        self.machine.set_trace_writer(writer);
    }

    pub fn events(&self) -> &SessionEvents {
        &self.events
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn contacts(&self) -> &ContactSet<f64> {
        self.gateway.contacts()
    }

    pub fn held(&self) -> bool {
        sign_hold_status(self.gateway.contacts(), &self.config.layout).held
    }

    pub fn instant_index(&self) -> u64 {
        self.instants
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Feeds a sample into the next instant.
    pub fn ingest(&mut self, sample: &TouchSample<f64>) -> Result<IngestOutcome, MachineError> {
        let outcome = self.gateway.ingest(sample)?;
        if let IngestOutcome::Dropped(_) = outcome {
            self.anomalies += 1;
        }
        Ok(outcome)
    }

    pub fn step(&mut self) -> InstantReport {
        let report = self.machine.react();
        self.instants += 1;
        self.full_hash.update(report.to_json_line().as_bytes());
        self.full_hash.update(b"\n");
        let line = game_event_line(&report, self.session);
        self.game_hash.update(line.as_bytes());
        self.game_hash.update(b"\n");
        if let Some(lines) = &mut self.game_lines {
            lines.push(line);
        }
        if report.terminated.contains(&self.session) {
            self.finished = true;
        }
        self.errors.extend(report.errors.iter().cloned());
        report
    }

    pub fn finish(self) -> ReplayOutcome {
        let trace_digest = hex::encode(self.full_hash.finalize());
        let game_event_digest = hex::encode(self.game_hash.finalize());
        let config_digest = self.config.digest();
        let session_id = derive_session_id(&config_digest, &game_event_digest);
        let (stats, observed) = match &self.buffer {
            Some(buffer) => {
                let trials = buffer
                    .trials(SessionEvents::TRIAL_RECORD)
                    .expect("trial records decode");
                (
                    Some(SessionStats::new(session_id.clone(), config_digest, trials)),
                    buffer.snapshot(),
                )
            }
            None => (None, Vec::new()),
        };
        ReplayOutcome {
            instants: self.instants,
            completed: self.finished,
            trace_digest,
            game_event_digest,
            session_id,
            anomalies: self.anomalies,
            errors: self.errors,
            stats,
            observed,
            game_lines: self.game_lines.unwrap_or_default(),
        }
    }
}

/// The instant restricted to game events and the session program.
pub fn game_event_line(report: &InstantReport, session: ProgramHandle) -> String {
    let emitted: BTreeMap<String, _> = report
        .emitted
        .iter()
        .filter(|(name, _)| SessionEvents::GAME_EVENTS.contains(&name.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let filtered = InstantReport {
        instant: report.instant,
        emitted,
        terminated: report.terminated.iter().copied().filter(|h| *h == session).collect(),
        errors: Vec::new(),
    };
    filtered.to_json_line()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayOutcome {
    pub instants: u64,
    /// The session program terminated.
    pub completed: bool,
    /// SHA-256 over every instant line of the full trace.
    pub trace_digest: String,
    /// SHA-256 over the game-event lines only.
    pub game_event_digest: String,
    pub session_id: String,
    pub anomalies: u64,
    pub errors: Vec<ReactionError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SessionStats>,
    #[serde(skip)]
    pub observed: Vec<ObservedEvent>,
    #[serde(skip)]
    pub game_lines: Vec<String>,
}

#[derive(Default)]
pub struct ReplayOptions {
    pub observe: bool,
    pub keep_game_lines: bool,
    pub instant_writer: Option<Box<dyn Write + Send>>,
}

/// Instants a replay may run: up to the last sample, then while the signs
/// are held at most the whole play budget.
pub fn instant_cap(config: &SessionConfig, samples: &[TouchSample<f64>]) -> u64 {
    let last = samples.last().map_or(0, |s| quantize_tick(s.t_ms, config.tick_hz));
    let budget: u64 = config
        .games_in_order()
        .iter()
        .map(|g| g.duration_ticks(config.tick_hz) + 1)
        .sum();
    last + budget + 2
}

pub fn replay(config: &SessionConfig, samples: &[TouchSample<f64>], options: ReplayOptions) -> ReplayOutcome {
    replay_with(config, samples, options, |_, _| {})
}

/// Replays `samples`, calling `on_instant` after each reaction with the report
/// and the host-side contact set.
///
/// Stops when the session terminates, or once past the last sample with the
/// signs released.
pub fn replay_with<F>(
    config: &SessionConfig,
    samples: &[TouchSample<f64>],
    options: ReplayOptions,
    mut on_instant: F,
) -> ReplayOutcome
where
    F: FnMut(&InstantReport, &ContactSet<f64>),
{
    let mut run = SessionRun::new(config, options.observe);
    if options.keep_game_lines {
        run.keep_game_lines();
    }
    run.set_instant_writer(options.instant_writer);
    let hz = config.tick_hz;
    let last_tick = samples.last().map(|s| quantize_tick(s.t_ms, hz));
    let cap = instant_cap(config, samples);
    let mut next = 0;
    loop {
        let tick = run.instant_index();
        while next < samples.len() && quantize_tick(samples[next].t_ms, hz) <= tick {
            run.ingest(&samples[next]).expect("gateway events are declared on this machine");
            next += 1;
        }
        let report = run.step();
        on_instant(&report, run.contacts());
        let past_input = last_tick.is_none_or(|t| tick >= t);
        if run.is_finished() || (past_input && !run.held()) || tick + 1 >= cap {
            break;
        }
    }
    run.finish()
}
