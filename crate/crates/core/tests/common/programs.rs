//! Random reactive programs with instrumentation for property checks.

use std::sync::{Arc, Mutex};

use danse_core::reactive::{EventId, InstantReport, Machine, Payload, Program};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde_json::json;

pub const EVENTS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone)]
pub enum Shape {
    Nothing,
    Pause,
    Emit(usize, i64),
    Signal(usize),
    Await(usize),
    Read(usize),
    Relay(usize, usize),
    Seq(Box<Shape>, Box<Shape>),
    Par(Vec<Shape>),
    Repeat(u8, Box<Shape>),
    Loop(Box<Shape>),
    WhenElse(usize, Box<Shape>, Box<Shape>),
    Until(usize, Box<Shape>, Box<Shape>),
    Local(usize, Box<Shape>),
}

pub fn shape() -> impl Strategy<Value = Shape> {
    let ev = 0..EVENTS.len();
    let leaf = prop_oneof![
        1 => Just(Shape::Nothing),
        3 => Just(Shape::Pause),
        3 => (ev.clone(), -5i64..5).prop_map(|(e, v)| Shape::Emit(e, v)),
        1 => ev.clone().prop_map(Shape::Signal),
        2 => ev.clone().prop_map(Shape::Await),
        3 => ev.clone().prop_map(Shape::Read),
        1 => (ev.clone(), ev.clone()).prop_map(|(a, b)| Shape::Relay(a, b)),
    ];
    leaf.prop_recursive(4, 48, 4, move |inner| {
        let ev = 0..EVENTS.len();
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Shape::Seq(Box::new(a), Box::new(b))),
            3 => prop::collection::vec(inner.clone(), 2..4).prop_map(Shape::Par),
            1 => (0u8..4, inner.clone()).prop_map(|(n, b)| Shape::Repeat(n, Box::new(b))),
            1 => inner.clone().prop_map(|b| Shape::Loop(Box::new(b))),
            2 => (ev.clone(), inner.clone(), inner.clone())
                .prop_map(|(e, a, b)| Shape::WhenElse(e, Box::new(a), Box::new(b))),
            2 => (ev.clone(), inner.clone(), inner.clone())
                .prop_map(|(e, a, b)| Shape::Until(e, Box::new(a), Box::new(b))),
            1 => (ev, inner).prop_map(|(e, b)| Shape::Local(e, Box::new(b))),
        ]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Read {
        instant: u64,
        event: String,
        values: Option<Vec<Payload>>,
    },
    ElseReached {
        id: usize,
        instant: u64,
        event: String,
    },
    ElseStart {
        id: usize,
        instant: u64,
    },
    UntilReached {
        id: usize,
        event: String,
    },
    HandlerStart {
        id: usize,
        instant: u64,
    },
}

pub type Log = Arc<Mutex<Vec<Entry>>>;

fn push(log: &Log, e: Entry) {
    log.lock().unwrap().push(e);
}

pub struct Builder<'a> {
    pub ids: &'a [EventId],
    pub log: Log,
    next_id: usize,
}

impl<'a> Builder<'a> {
    pub fn new(ids: &'a [EventId], log: Log) -> Self {
        Builder { ids, log, next_id: 0 }
    }

    pub fn build(&mut self, s: &Shape) -> Program {
        match s {
            Shape::Nothing => Program::nothing(),
            Shape::Pause => Program::pause(),
            Shape::Emit(e, v) => Program::emit(self.ids[*e], json!(v)),
            Shape::Signal(e) => Program::generate(self.ids[*e]),
            Shape::Await(e) => Program::await_event(self.ids[*e]),
            Shape::Read(e) => {
                let (id, log) = (self.ids[*e], self.log.clone());
                Program::atom(move |ctx| {
                    let event = ctx.event_name(id)?.to_owned();
                    let instant = ctx.instant();
                    let values = ctx.read_values(id)?.map(<[_]>::to_vec);
                    push(&log, Entry::Read { instant, event, values });
                    Ok(())
                })
            }
            Shape::Relay(a, b) => {
                let (a, b) = (self.ids[*a], self.ids[*b]);
                Program::atom(move |ctx| {
                    if ctx.is_present(a)? {
                        ctx.generate(b, Some(json!("relay")))?;
                    }
                    Ok(())
                })
            }
            Shape::Seq(a, b) => Program::seq(self.build(a), self.build(b)),
            Shape::Par(v) => Program::par(v.iter().map(|s| self.build(s)).collect::<Vec<_>>()),
            Shape::Repeat(n, b) => Program::repeat(*n as u64, self.build(b)),
            Shape::Loop(b) => Program::forever(Program::seq(self.build(b), Program::pause())),
            Shape::WhenElse(e, then, other) => {
                let id = self.next_id;
                self.next_id += 1;
                let ev = self.ids[*e];
                let (l1, l2) = (self.log.clone(), self.log.clone());
                let reached = Program::atom(move |ctx| {
                    let event = ctx.event_name(ev)?.to_owned();
                    push(&l1, Entry::ElseReached { id, instant: ctx.instant(), event });
                    Ok(())
                });
                let start = Program::atom(move |ctx| {
                    push(&l2, Entry::ElseStart { id, instant: ctx.instant() });
                    Ok(())
                });
                let then = self.build(then);
                let other = self.build(other);
                Program::seq(reached, Program::when_present_else(ev, then, Program::seq(start, other)))
            }
            Shape::Until(e, body, handler) => {
                let id = self.next_id;
                self.next_id += 1;
                let ev = self.ids[*e];
                let (l1, l2) = (self.log.clone(), self.log.clone());
                let reached = Program::atom(move |ctx| {
                    let event = ctx.event_name(ev)?.to_owned();
                    push(&l1, Entry::UntilReached { id, event });
                    Ok(())
                });
                let start = Program::atom(move |ctx| {
                    push(&l2, Entry::HandlerStart { id, instant: ctx.instant() });
                    Ok(())
                });
                let body = self.build(body);
                let handler = self.build(handler);
                Program::seq(reached, Program::until(ev, body, Program::seq(start, handler)))
            }
            Shape::Local(e, b) => Program::local(self.ids[*e], self.build(b)),
        }
    }
}

/// One run of `shapes` for `instants` instants with seeded random injections.
pub struct Run {
    pub reports: Vec<InstantReport>,
    pub log: Vec<Entry>,
}

impl Run {
    /// Byte trace: report lines, errors and the instrumentation log.
    pub fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.reports {
            out.extend_from_slice(r.to_json_line().as_bytes());
            out.extend_from_slice(format!(" {:?}\n", r.errors).as_bytes());
        }
        out.extend_from_slice(format!("{:?}", self.log).as_bytes());
        out
    }
}

pub fn run(shapes: &[Shape], instants: usize, seed: u64) -> Run {
    let mut m = Machine::new();
    let ids: Vec<EventId> = EVENTS.iter().map(|n| m.event(n)).collect();
    let log: Log = Arc::default();
    let mut b = Builder::new(&ids, log.clone());
    for s in shapes {
        let p = b.build(s);
        m.add_program(p).unwrap();
    }
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(instants);
    for _ in 0..instants {
        for &id in &ids {
            if rng.random::<f64>() < 0.2 {
                m.inject(id, Some(json!(rng.random_range(0..100)))).unwrap();
            }
        }
        reports.push(m.react());
    }
    let log = log.lock().unwrap().clone();
    Run { reports, log }
}

/// Checks value coherence and deferred reaction to absence; returns the
/// violations found.
pub fn violations(run: &Run) -> Vec<String> {
    let mut out = Vec::new();
    let present = |instant: u64, event: &str| {
        run.reports
            .get(instant as usize)
            .is_some_and(|r| r.is_present(event))
    };
    let mut else_reached: Vec<(usize, u64, String)> = Vec::new();
    let mut until_events: std::collections::HashMap<usize, String> = Default::default();
    for entry in &run.log {
        match entry {
            Entry::Read {
                instant,
                event,
                values: Some(values),
            } => {
                let final_list = run.reports[*instant as usize].values(event);
                if final_list != Some(values.as_slice()) {
                    out.push(format!("instant {instant}: {event} read {values:?}, final {final_list:?}"));
                }
            }
            Entry::Read { .. } => {}
            Entry::ElseReached { id, instant, event } => else_reached.push((*id, *instant, event.clone())),
            Entry::ElseStart { id, instant } => {
                let reached = else_reached
                    .iter()
                    .rev()
                    .find(|(i, _, _)| i == id)
                    .cloned();
                match reached {
                    Some((_, at, event)) => {
                        if *instant != at + 1 {
                            out.push(format!("else {id} reached at {at} started at {instant}"));
                        }
                        if present(at, &event) {
                            out.push(format!("else {id} ran although {event} was present at {at}"));
                        }
                    }
                    None => out.push(format!("else {id} started without being reached")),
                }
            }
            Entry::UntilReached { id, event } => {
                until_events.insert(*id, event.clone());
            }
            Entry::HandlerStart { id, instant } => {
                let event = &until_events[id];
                if *instant == 0 || !present(instant - 1, event) {
                    out.push(format!("handler {id} started at {instant} without {event} just before"));
                }
            }
        }
    }
    out
}
