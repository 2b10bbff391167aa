use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use super::env::{resolve, ActionCtx, EventTable, Environment, FrozenEnv, GenerateOutcome};
use super::program::{Action, Instr, Observer, Producer};
use super::{EventId, MachineError, Payload, Program, ProgramHandle, ReactionError};

static NEXT_MACHINE: AtomicU32 = AtomicU32::new(1);

type BranchId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    /// Completed.
    Term,
    /// Done for this instant.
    Stop,
    /// Blocked on an event whose status is still unknown.
    Susp,
    /// Aborted by an error; the enclosing branch terminates.
    Killed,
}

struct PendingObserve {
    observer: Observer,
    scope: Vec<(EventId, EventId)>,
    branch: BranchId,
    handle: ProgramHandle,
}

/// Mutable state threaded through one instant's activations.
struct Rt<'m> {
    machine: u32,
    instant: u64,
    eoi: bool,
    moved: bool,
    env: &'m mut Environment,
    table: &'m mut EventTable,
    scope: Vec<(EventId, EventId)>,
    handle: ProgramHandle,
    branch: BranchId,
    next_branch: &'m mut BranchId,
    killed: &'m HashSet<BranchId>,
    local_counter: &'m mut u64,
    errors: Vec<ReactionError>,
    observers: Vec<PendingObserve>,
    sealed_writes: Vec<u32>,
}

impl Rt<'_> {
    fn resolve(&self, event: EventId) -> u32 {
        resolve(self.machine, self.table, &self.scope, event)
            .expect("event ids are checked when a program is added")
    }

    fn fresh_branch(&mut self) -> BranchId {
        *self.next_branch += 1;
        *self.next_branch
    }

    fn generate(&mut self, index: u32, value: Option<Payload>) {
        match self.env.generate(index, value) {
            GenerateOutcome::NewlyPresent => self.moved = true,
            GenerateOutcome::AlreadyPresent => {}
            GenerateOutcome::Sealed => self.sealed_writes.push(index),
        }
    }

    fn flush_sealed_writes(&mut self) {
        for index in self.sealed_writes.drain(..) {
            self.errors.push(ReactionError::CausalityViolation {
                handle: self.handle,
                event: self.table.name(index).to_owned(),
            });
        }
    }

    fn ctx(&mut self) -> ActionCtx<'_> {
        ActionCtx {
            env: &mut *self.env,
            table: &*self.table,
            scope: &self.scope,
            machine: self.machine,
            moved: &mut self.moved,
            sealed_writes: &mut self.sealed_writes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BranchState {
    Running,
    StoppedAt(u64),
    Done,
}

struct Branch {
    id: BranchId,
    node: Node,
    state: BranchState,
}

impl Branch {
    fn new(program: &Program, rt: &mut Rt<'_>) -> Self {
        let id = rt.fresh_branch();
        Branch {
            id,
            node: Node::new(program),
            state: BranchState::Running,
        }
    }

    /// Activates the branch unless it is finished or already stopped in this
    /// instant. Returns the status it contributes to its parent.
    fn step(&mut self, rt: &mut Rt<'_>) -> Status {
        match self.state {
            BranchState::Done => return Status::Term,
            BranchState::StoppedAt(i) if i == rt.instant => return Status::Stop,
            _ => {}
        }
        if rt.killed.contains(&self.id) {
            self.state = BranchState::Done;
            return Status::Term;
        }
        let outer = rt.branch;
        rt.branch = self.id;
        let status = self.node.activate(rt);
        rt.branch = outer;
        match status {
            Status::Term | Status::Killed => {
                self.state = BranchState::Done;
                self.node = Node::Nothing;
                status
            }
            Status::Stop => {
                self.state = BranchState::StoppedAt(rt.instant);
                Status::Stop
            }
            Status::Susp => {
                self.state = BranchState::Running;
                Status::Susp
            }
        }
    }
}

enum Testing {
    Pending,
    Chosen(Box<Node>),
}

enum UntilState {
    Running,
    BodyStopped,
    Handler(Box<Node>),
}

enum Node {
    Nothing,
    Atom(Action),
    Observe(Observer),
    Pause {
        fired: bool,
    },
    Seq {
        current: Box<Node>,
        next: Option<Program>,
    },
    Par {
        source: Vec<Program>,
        branches: Option<Vec<Branch>>,
    },
    Loop {
        body_program: Program,
        body: Box<Node>,
        last_term: Option<u64>,
    },
    Repeat {
        remaining: u64,
        body_program: Program,
        body: Option<Box<Node>>,
    },
    Generate(EventId, Option<Producer>),
    Await(EventId),
    Present {
        event: EventId,
        then: Program,
        otherwise: Program,
        state: Testing,
    },
    Until {
        event: EventId,
        body: Box<Node>,
        handler: Program,
        state: UntilState,
    },
    Local {
        event: EventId,
        fresh: Option<EventId>,
        body: Box<Node>,
    },
}

impl Node {
    fn new(program: &Program) -> Node {
        match program.instr() {
            Instr::Nothing => Node::Nothing,
            Instr::Atom(a) => Node::Atom(a.clone()),
            Instr::Observe(o) => Node::Observe(o.clone()),
            Instr::Pause => Node::Pause { fired: false },
            Instr::Seq(a, b) => Node::Seq {
                current: Box::new(Node::new(a)),
                next: Some(b.clone()),
            },
            Instr::Par(branches) => Node::Par {
                source: branches.clone(),
                branches: None,
            },
            Instr::Loop(body) => Node::Loop {
                body_program: body.clone(),
                body: Box::new(Node::new(body)),
                last_term: None,
            },
            Instr::Repeat(n, body) => Node::Repeat {
                remaining: *n,
                body_program: body.clone(),
                body: None,
            },
            Instr::Generate(e, p) => Node::Generate(*e, p.clone()),
            Instr::Await(e) => Node::Await(*e),
            Instr::WhenPresentElse(e, a, b) => Node::Present {
                event: *e,
                then: a.clone(),
                otherwise: b.clone(),
                state: Testing::Pending,
            },
            Instr::Until(e, body, handler) => Node::Until {
                event: *e,
                body: Box::new(Node::new(body)),
                handler: handler.clone(),
                state: UntilState::Running,
            },
            Instr::LocalEvent(e, body) => Node::Local {
                event: *e,
                fresh: None,
                body: Box::new(Node::new(body)),
            },
        }
    }

    fn activate(&mut self, rt: &mut Rt<'_>) -> Status {
        match self {
            Node::Nothing => Status::Term,
            Node::Atom(action) => {
                let action = action.clone();
                let result = action(&mut rt.ctx());
                rt.flush_sealed_writes();
                match result {
                    Ok(()) => Status::Term,
                    Err(err) => {
                        rt.errors.push(ReactionError::ActionFailure {
                            handle: rt.handle,
                            message: err.to_string(),
                        });
                        Status::Killed
                    }
                }
            }
            Node::Observe(observer) => {
                rt.observers.push(PendingObserve {
                    observer: observer.clone(),
                    scope: rt.scope.clone(),
                    branch: rt.branch,
                    handle: rt.handle,
                });
                Status::Term
            }
            Node::Pause { fired } => {
                if *fired {
                    Status::Term
                } else {
                    *fired = true;
                    Status::Stop
                }
            }
            Node::Seq { current, next } => loop {
                match current.activate(rt) {
                    Status::Term => match next.take() {
                        Some(program) => **current = Node::new(&program),
                        None => return Status::Term,
                    },
                    other => return other,
                }
            },
            Node::Par { source, branches } => {
                let branches = match branches {
                    Some(b) => b,
                    None => {
                        let created = source.iter().map(|p| Branch::new(p, rt)).collect();
                        source.clear();
                        branches.insert(created)
                    }
                };
                let mut all_done = true;
                let mut any_susp = false;
                for branch in branches.iter_mut() {
                    match branch.step(rt) {
                        Status::Term | Status::Killed => {}
                        Status::Stop => all_done = false,
                        Status::Susp => {
                            all_done = false;
                            any_susp = true;
                        }
                    }
                }
                if all_done {
                    Status::Term
                } else if any_susp {
                    Status::Susp
                } else {
                    Status::Stop
                }
            }
            Node::Loop {
                body_program,
                body,
                last_term,
            } => loop {
                match body.activate(rt) {
                    Status::Term => {
                        if *last_term == Some(rt.instant) {
                            rt.errors
                                .push(ReactionError::InstantaneousLoop { handle: rt.handle });
                            return Status::Killed;
                        }
                        *last_term = Some(rt.instant);
                        **body = Node::new(body_program);
                    }
                    other => return other,
                }
            },
            Node::Repeat {
                remaining,
                body_program,
                body,
            } => loop {
                if *remaining == 0 {
                    return Status::Term;
                }
                let node = body.get_or_insert_with(|| Box::new(Node::new(body_program)));
                match node.activate(rt) {
                    Status::Term => {
                        *remaining -= 1;
                        *body = None;
                    }
                    other => return other,
                }
            },
            Node::Generate(event, producer) => {
                let index = rt.resolve(*event);
                let value = producer.clone().map(|p| p(&mut rt.ctx()));
                rt.generate(index, value);
                rt.flush_sealed_writes();
                Status::Term
            }
            Node::Await(event) => {
                let index = rt.resolve(*event);
                if rt.env.is_present(index) {
                    Status::Term
                } else if rt.eoi {
                    Status::Stop
                } else {
                    Status::Susp
                }
            }
            Node::Present {
                event,
                then,
                otherwise,
                state,
            } => {
                if let Testing::Pending = state {
                    let index = rt.resolve(*event);
                    if rt.env.is_present(index) {
                        *state = Testing::Chosen(Box::new(Node::new(then)));
                    } else if rt.eoi {
                        *state = Testing::Chosen(Box::new(Node::new(otherwise)));
                        return Status::Stop;
                    } else {
                        return Status::Susp;
                    }
                }
                match state {
                    Testing::Chosen(node) => node.activate(rt),
                    Testing::Pending => unreachable!(),
                }
            }
            Node::Until {
                event,
                body,
                handler,
                state,
            } => {
                match state {
                    UntilState::Handler(node) => return node.activate(rt),
                    UntilState::Running => match body.activate(rt) {
                        Status::Stop => *state = UntilState::BodyStopped,
                        other => return other,
                    },
                    UntilState::BodyStopped => {}
                }
                let index = rt.resolve(*event);
                if rt.env.is_present(index) {
                    *state = UntilState::Handler(Box::new(Node::new(handler)));
                    Status::Stop
                } else if rt.eoi {
                    *state = UntilState::Running;
                    Status::Stop
                } else {
                    Status::Susp
                }
            }
            Node::Local { event, fresh, body } => {
                let inner = match fresh {
                    Some(e) => *e,
                    None => {
                        *rt.local_counter += 1;
                        let name = format!(
                            "{}#{}",
                            rt.table.name(rt.resolve(*event)),
                            rt.local_counter
                        );
                        let e = EventId {
                            machine: rt.machine,
                            index: rt.table.intern(&name),
                        };
                        *fresh = Some(e);
                        e
                    }
                };
                rt.scope.push((*event, inner));
                let status = body.activate(rt);
                rt.scope.pop();
                status
            }
        }
    }
}

/// Outcome of one logical instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstantReport {
    pub instant: u64,
    /// Every event present at the end of the instant, by name, with its values.
    pub emitted: BTreeMap<String, Vec<Payload>>,
    /// Top-level programs that completed during the instant.
    pub terminated: Vec<ProgramHandle>,
    #[serde(skip)]
    pub errors: Vec<ReactionError>,
}

impl InstantReport {
    /// One line of the debug trace: `{"instant":N,"emitted":{..},"terminated":[..]}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn is_present(&self, name: &str) -> bool {
        self.emitted.contains_key(name)
    }

    pub fn values(&self, name: &str) -> Option<&[Payload]> {
        self.emitted.get(name).map(Vec::as_slice)
    }
}

type Queue = Arc<Mutex<Vec<(EventId, Option<Payload>)>>>;

/// Thread-safe handle for injecting events into the next instant.
#[derive(Clone)]
pub struct Injector {
    machine: u32,
    events: Arc<AtomicUsize>,
    queue: Queue,
}

impl Injector {
    /// Makes `event` present at the next reaction, appending `value` in call order.
    pub fn inject(&self, event: EventId, value: Option<Payload>) -> Result<(), MachineError> {
        if event.machine != self.machine || event.index as usize >= self.events.load(Ordering::Acquire)
        {
            return Err(MachineError::UnknownEvent(event));
        }
        self.queue
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push((event, value));
        Ok(())
    }
}

struct TopLevel {
    handle: ProgramHandle,
    branch: Branch,
}

/// Executes top-level programs in parallel, one logical instant per [`Machine::react`].
pub struct Machine {
    id: u32,
    table: EventTable,
    env: Environment,
    programs: Vec<TopLevel>,
    next_handle: u64,
    next_branch: BranchId,
    local_counter: u64,
    killed: HashSet<BranchId>,
    instant: u64,
    queue: Queue,
    declared: Arc<AtomicUsize>,
    trace: Option<Box<dyn Write + Send>>,
}

impl Default for Machine {
    fn default() -> Self {
        Self::new()
    }
}

impl Machine {
    pub fn new() -> Self {
        Machine {
            id: NEXT_MACHINE.fetch_add(1, Ordering::Relaxed),
            table: EventTable::default(),
            env: Environment::default(),
            programs: Vec::new(),
            next_handle: 0,
            next_branch: 0,
            local_counter: 0,
            killed: HashSet::new(),
            instant: 0,
            queue: Arc::new(Mutex::new(Vec::new())),
            declared: Arc::new(AtomicUsize::new(0)),
            trace: None,
        }
    }

    /// Interns `name`; the same name always yields the same id.
    pub fn event(&mut self, name: &str) -> EventId {
        let index = self.table.intern(name);
        self.declared.store(self.table.len(), Ordering::Release);
        EventId {
            machine: self.id,
            index,
        }
    }

    pub fn lookup(&self, name: &str) -> Option<EventId> {
        self.table.lookup(name).map(|index| EventId {
            machine: self.id,
            index,
        })
    }

    pub fn event_name(&self, event: EventId) -> Result<&str, MachineError> {
        let i = resolve(self.id, &self.table, &[], event)?;
        Ok(self.table.name(i))
    }

    /// Number of completed reactions.
    pub fn instant_index(&self) -> u64 {
        self.instant
    }

    pub fn program_count(&self) -> usize {
        self.programs.len()
    }

    /// Handles of programs that have not terminated yet.
    pub fn live_programs(&self) -> Vec<ProgramHandle> {
        self.programs
            .iter()
            .filter(|p| p.branch.state != BranchState::Done)
            .map(|p| p.handle)
            .collect()
    }

    /// Adds `program` to the top-level parallel set; it first runs at the next reaction.
    pub fn add_program(&mut self, program: Program) -> Result<ProgramHandle, MachineError> {
        let mut bad = None;
        program.for_each_event(&mut |e| {
            if bad.is_none() && resolve(self.id, &self.table, &[], e).is_err() {
                bad = Some(e);
            }
        });
        if let Some(e) = bad {
            return Err(MachineError::UnknownEvent(e));
        }
        let handle = ProgramHandle(self.next_handle);
        self.next_handle += 1;
        self.next_branch += 1;
        self.programs.push(TopLevel {
            handle,
            branch: Branch {
                id: self.next_branch,
                node: Node::new(&program),
                state: BranchState::Running,
            },
        });
        Ok(handle)
    }

    pub fn injector(&self) -> Injector {
        Injector {
            machine: self.id,
            events: self.declared.clone(),
            queue: self.queue.clone(),
        }
    }

    pub fn inject(&self, event: EventId, value: Option<Payload>) -> Result<(), MachineError> {
        self.injector().inject(event, value)
    }

    /// Writes every subsequent report as a JSON line to `writer`.
    pub fn set_trace_writer(&mut self, writer: Option<Box<dyn Write + Send>>) {
        self.trace = writer;
    }

    /// Executes one logical instant to completion.
    pub fn react(&mut self) -> InstantReport {
        let instant = self.instant;
        self.env.begin(instant, self.table.len());
        let injected = std::mem::take(&mut *self.queue.lock().unwrap_or_else(|e| e.into_inner()));
        for (event, value) in injected {
            self.env.generate(event.index, value);
        }

        let mut rt = Rt {
            machine: self.id,
            instant,
            eoi: false,
            moved: false,
            env: &mut self.env,
            table: &mut self.table,
            scope: Vec::new(),
            handle: ProgramHandle(0),
            branch: 0,
            next_branch: &mut self.next_branch,
            killed: &self.killed,
            local_counter: &mut self.local_counter,
            errors: Vec::new(),
            observers: Vec::new(),
            sealed_writes: Vec::new(),
        };
        let mut terminated = Vec::new();
        loop {
            rt.moved = false;
            let mut any_susp = false;
            for top in self.programs.iter_mut() {
                rt.handle = top.handle;
                match top.branch.step(&mut rt) {
                    Status::Susp => any_susp = true,
                    Status::Term | Status::Killed => {
                        if !terminated.contains(&top.handle) {
                            terminated.push(top.handle);
                        }
                    }
                    Status::Stop => {}
                }
            }
            if !any_susp || rt.eoi {
                break;
            }
            if !rt.moved {
                rt.eoi = true;
            }
        }
        let Rt {
            errors: mut reaction_errors,
            observers,
            ..
        } = rt;

        let mut killed = HashSet::new();
        for pending in observers {
            let frozen = FrozenEnv {
                env: &self.env,
                table: &self.table,
                scope: &pending.scope,
                machine: self.id,
            };
            if let Err(err) = (pending.observer)(&frozen) {
                reaction_errors.push(ReactionError::ActionFailure {
                    handle: pending.handle,
                    message: err.to_string(),
                });
                killed.insert(pending.branch);
            }
        }
        self.killed = killed;

        let emitted = self
            .env
            .present_events()
            .iter()
            .map(|&i| {
                let values = match self.env.frozen(i) {
                    super::EventStatus::Present(v) => v.to_vec(),
                    _ => Vec::new(),
                };
                (self.table.name(i).to_owned(), values)
            })
            .collect();

        self.programs.retain(|p| p.branch.state != BranchState::Done);
        self.instant += 1;
        let report = InstantReport {
            instant,
            emitted,
            terminated,
            errors: reaction_errors,
        };
        if let Some(writer) = self.trace.as_mut() {
            // Trace output is best effort and never affects execution.
            let _ = writeln!(writer, "{}", report.to_json_line());
        }
        report
    }
}
