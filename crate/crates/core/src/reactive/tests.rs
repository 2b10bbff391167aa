use std::sync::{Arc, Mutex};

use serde_json::json;

use super::*;

fn present_sets(reports: &[InstantReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| r.emitted.keys().cloned().collect())
        .collect()
}

fn run(m: &mut Machine, n: usize) -> Vec<InstantReport> {
    (0..n).map(|_| m.react()).collect()
}

#[test]
fn empty_machine() {
    let mut m = Machine::new();
    assert_eq!(m.instant_index(), 0);
    assert_eq!(m.program_count(), 0);
    let r = m.react();
    assert_eq!(r.instant, 0);
    assert!(r.emitted.is_empty());
    assert!(r.terminated.is_empty());
    assert_eq!(m.instant_index(), 1);
}

#[test]
fn machines_are_isolated() {
    let mut a = Machine::new();
    let mut b = Machine::new();
    let ea = a.event("E");
    let eb = b.event("E");
    a.inject(ea, None).unwrap();
    assert!(a.react().is_present("E"));
    assert!(!b.react().is_present("E"));
    // ids from one machine are rejected by the other
    assert_eq!(b.inject(ea, None), Err(MachineError::UnknownEvent(ea)));
    assert!(a.add_program(Program::generate(eb)).is_err());
}

#[test]
fn interning_is_stable() {
    let mut m = Machine::new();
    let e1 = m.event("E");
    let f = m.event("F");
    assert_eq!(m.event("E"), e1);
    assert_ne!(e1, f);
    assert_eq!(m.lookup("F"), Some(f));
    assert_eq!(m.event_name(f).unwrap(), "F");
}

#[test]
fn generate_is_present_at_first_instant() {
    let mut m = Machine::new();
    let e = m.event("E");
    let h1 = m.add_program(Program::generate(e)).unwrap();
    let h2 = m.add_program(Program::nothing()).unwrap();
    assert_ne!(h1, h2);
    let r = m.react();
    assert_eq!(r.values("E"), Some(&[][..]));
    assert_eq!(r.terminated, vec![h1, h2]);
}

#[test]
fn await_blocks_across_instants() {
    let mut m = Machine::new();
    let e = m.event("E");
    let h = m.add_program(Program::await_event(e)).unwrap();
    for r in run(&mut m, 2) {
        assert!(r.emitted.is_empty());
        assert!(r.terminated.is_empty());
    }
    assert_eq!(m.live_programs(), vec![h]);
}

#[test]
fn injection_order_is_kept() {
    let mut m = Machine::new();
    let e = m.event("E");
    m.inject(e, Some(json!(1))).unwrap();
    m.inject(e, Some(json!(2))).unwrap();
    let r = m.react();
    assert_eq!(r.values("E").unwrap(), &[json!(1), json!(2)]);
    // nothing carried over
    assert!(m.react().emitted.is_empty());
}

#[test]
fn injector_works_from_another_thread() {
    let mut m = Machine::new();
    let e = m.event("E");
    let inj = m.injector();
    std::thread::spawn(move || inj.inject(e, Some(json!("x"))).unwrap())
        .join()
        .unwrap();
    assert_eq!(m.react().values("E").unwrap(), &[json!("x")]);
}

#[test]
fn instantaneous_broadcast_resumes_waiter() {
    let mut m = Machine::new();
    let e = m.event("E");
    let f = m.event("F");
    m.add_program(Program::par([
        Program::seq(Program::await_event(e), Program::generate(f)),
        Program::generate(e),
    ]))
    .unwrap();
    let r = m.react();
    assert!(r.is_present("E") && r.is_present("F"));
}

#[test]
fn else_branch_runs_next_instant() {
    let mut m = Machine::new();
    let e = m.event("E");
    let f = m.event("F");
    let g = m.event("G");
    m.add_program(Program::when_present_else(
        e,
        Program::generate(f),
        Program::generate(g),
    ))
    .unwrap();
    let rs = run(&mut m, 2);
    assert!(rs[0].emitted.is_empty());
    assert_eq!(present_sets(&rs[1..]), vec![vec!["G".to_string()]]);
}

#[test]
fn then_branch_runs_same_instant() {
    let mut m = Machine::new();
    let e = m.event("E");
    let f = m.event("F");
    let g = m.event("G");
    m.add_program(Program::when_present_else(
        e,
        Program::generate(f),
        Program::generate(g),
    ))
    .unwrap();
    m.inject(e, None).unwrap();
    assert_eq!(present_sets(&[m.react()]), vec![vec!["E", "F"]]);
}

#[test]
fn instantaneous_loop_is_reported() {
    let mut m = Machine::new();
    let e = m.event("E");
    let h = m.add_program(Program::forever(Program::generate(e))).unwrap();
    let r = m.react();
    assert_eq!(r.errors, vec![ReactionError::InstantaneousLoop { handle: h }]);
    assert_eq!(r.terminated, vec![h]);
    // machine stays usable
    assert!(m.react().errors.is_empty());
}

#[test]
fn repeat_matches_hand_execution() {
    // instant | emitted | terminated
    //   0     |   E     |   -
    //   1     |   E     |   -
    //   2     |   E     |   -
    //   3     |   -     |   h
    let expected: [(&[&str], bool); 4] = [(&["E"], false), (&["E"], false), (&["E"], false), (&[], true)];
    let mut m = Machine::new();
    let e = m.event("E");
    let h = m
        .add_program(Program::repeat(
            3,
            Program::seq(Program::generate(e), Program::pause()),
        ))
        .unwrap();
    for (r, (events, term)) in run(&mut m, 4).iter().zip(expected) {
        let names: Vec<&str> = r.emitted.keys().map(String::as_str).collect();
        assert_eq!(names, events, "instant {}", r.instant);
        assert_eq!(r.terminated.contains(&h), term, "instant {}", r.instant);
    }
}

#[test]
fn repeat_zero_terminates_immediately() {
    let mut m = Machine::new();
    let e = m.event("E");
    let h = m.add_program(Program::repeat(0, Program::generate(e))).unwrap();
    let r = m.react();
    assert!(r.emitted.is_empty());
    assert_eq!(r.terminated, vec![h]);
}

#[test]
fn until_is_weak_preemption() {
    // instant | injected | emitted | note
    //   0     |    -     |   E     |
    //   1     |    -     |   E     |
    //   2     |    K     |   E,K   | body completes its instant
    //   3     |    -     |   H     | handler, program terminates
    let mut m = Machine::new();
    let e = m.event("E");
    let h_ev = m.event("H");
    let k = m.event("K");
    let h = m
        .add_program(Program::until(
            k,
            Program::forever(Program::seq(Program::generate(e), Program::pause())),
            Program::generate(h_ev),
        ))
        .unwrap();
    let mut rs = Vec::new();
    for i in 0..5 {
        if i == 2 {
            m.inject(k, None).unwrap();
        }
        rs.push(m.react());
    }
    assert_eq!(
        present_sets(&rs),
        vec![
            vec!["E".to_string()],
            vec!["E".to_string()],
            vec!["E".to_string(), "K".to_string()],
            vec!["H".to_string()],
            vec![],
        ]
    );
    assert_eq!(rs[3].terminated, vec![h]);
}

#[test]
fn until_body_termination_wins() {
    let mut m = Machine::new();
    let e = m.event("E");
    let h_ev = m.event("H");
    let k = m.event("K");
    m.add_program(Program::until(k, Program::generate(e), Program::generate(h_ev)))
        .unwrap();
    m.inject(k, None).unwrap();
    let rs = run(&mut m, 2);
    assert!(rs[0].is_present("E"));
    assert!(!rs[1].is_present("H"));
}

#[test]
fn until_waits_for_late_generation() {
    // body stops before K is generated later in the same instant
    let mut m = Machine::new();
    let k = m.event("K");
    let h_ev = m.event("H");
    m.add_program(Program::until(
        k,
        Program::forever(Program::pause()),
        Program::generate(h_ev),
    ))
    .unwrap();
    m.add_program(Program::generate(k)).unwrap();
    let rs = run(&mut m, 2);
    assert!(rs[1].is_present("H"));
}

#[test]
fn values_are_shared_and_per_instant() {
    let mut m = Machine::new();
    let e = m.event("E");
    let seen: Arc<Mutex<Vec<(u64, Option<Vec<Payload>>)>>> = Arc::default();
    let reader = |seen: Arc<Mutex<Vec<_>>>| {
        Program::atom(move |ctx| {
            let v = ctx.read_values(e)?.map(<[Payload]>::to_vec);
            seen.lock().unwrap().push((ctx.instant(), v));
            Ok(())
        })
    };
    m.add_program(Program::seq(
        Program::emit(e, json!(7)),
        Program::par([
            Program::seq(reader(seen.clone()), Program::pause()),
            Program::seq(reader(seen.clone()), Program::pause()),
        ]),
    ))
    .unwrap();
    m.add_program(Program::seq(Program::pause(), reader(seen.clone())))
        .unwrap();
    run(&mut m, 2);
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0], (0, Some(vec![json!(7)])));
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[2], (1, None));
}

#[test]
fn late_value_after_read_is_rejected() {
    let mut m = Machine::new();
    let e = m.event("E");
    m.add_program(Program::seq(
        Program::emit(e, json!(1)),
        Program::atom(move |ctx| {
            ctx.read_values(e)?;
            Ok(())
        }),
    ))
    .unwrap();
    let h = m.add_program(Program::emit(e, json!(2))).unwrap();
    let r = m.react();
    assert_eq!(r.values("E").unwrap(), &[json!(1)]);
    assert_eq!(
        r.errors,
        vec![ReactionError::CausalityViolation {
            handle: h,
            event: "E".into()
        }]
    );
}

#[test]
fn action_failure_kills_only_its_branch() {
    let mut m = Machine::new();
    let e = m.event("E");
    let f = m.event("F");
    let h = m
        .add_program(Program::par([
            Program::seq(
                Program::atom(|_| Err(ActionError::new("boom"))),
                Program::generate(f),
            ),
            Program::forever(Program::seq(Program::generate(e), Program::pause())),
        ]))
        .unwrap();
    let rs = run(&mut m, 3);
    assert_eq!(
        rs[0].errors,
        vec![ReactionError::ActionFailure {
            handle: h,
            message: "boom".into()
        }]
    );
    for r in &rs {
        assert!(r.is_present("E"));
        assert!(!r.is_present("F"));
    }
}

#[test]
fn observer_sees_final_lists_and_absence() {
    let mut m = Machine::new();
    let e = m.event("E");
    let g = m.event("G");
    let log: Arc<Mutex<Vec<String>>> = Arc::default();
    let sink = log.clone();
    m.add_program(Program::seq(
        Program::observe(move |env| {
            let values = env.read_values(e)?.map(<[Payload]>::to_vec);
            let g_absent = matches!(env.status(g)?, EventStatus::Absent);
            sink.lock().unwrap().push(format!("{values:?} {g_absent}"));
            Ok(())
        }),
        Program::emit(e, json!(1)),
    ))
    .unwrap();
    m.add_program(Program::emit(e, json!(2))).unwrap();
    m.react();
    assert_eq!(
        log.lock().unwrap().as_slice(),
        &["Some([Number(1), Number(2)]) true".to_string()]
    );
}

#[test]
fn failing_observer_terminates_branch_next_instant() {
    let mut m = Machine::new();
    let e = m.event("E");
    let h = m
        .add_program(Program::forever(Program::seq_all([
            Program::observe(|_| Err(ActionError::new("observer"))),
            Program::generate(e),
            Program::pause(),
        ])))
        .unwrap();
    let r0 = m.react();
    assert!(r0.is_present("E"));
    assert_eq!(r0.errors.len(), 1);
    let r1 = m.react();
    assert!(!r1.is_present("E"));
    assert_eq!(r1.terminated, vec![h]);
}

#[test]
fn local_event_shadows_outer() {
    let mut m = Machine::new();
    let e = m.event("E");
    let f = m.event("F");
    m.add_program(Program::par([
        Program::local(
            e,
            Program::par([
                Program::generate(e),
                Program::seq(Program::await_event(e), Program::generate(f)),
            ]),
        ),
        Program::seq(Program::pause(), Program::nothing()),
    ]))
    .unwrap();
    let r = m.react();
    assert!(!r.is_present("E"));
    assert!(r.is_present("F"));
    assert!(r.emitted.keys().any(|k| k.starts_with("E#")));
}

#[test]
fn trace_line_shape() {
    let mut m = Machine::new();
    let e = m.event("eventName");
    m.add_program(Program::emit(e, json!(3))).unwrap();
    assert_eq!(
        m.react().to_json_line(),
        r#"{"instant":0,"emitted":{"eventName":[3]},"terminated":[0]}"#
    );
}

#[test]
fn trace_writer_receives_lines() {
    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);
    impl std::io::Write for Shared {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let out = Shared::default();
    let mut m = Machine::new();
    m.set_trace_writer(Some(Box::new(out.clone())));
    m.react();
    m.react();
    let text = String::from_utf8(out.0.lock().unwrap().clone()).unwrap();
    assert_eq!(text.lines().count(), 2);
}
