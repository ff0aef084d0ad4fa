mod common;

use patientflow::engine::{EventSink, Model};
use proptest::prelude::*;

use common::{event_log_violations, minimal, row_sum_violations, InvariantChecker};

fn checked_run(scenario_seed: u64, run_seed: u64, days: u32) -> Vec<String> {
    let mut s = minimal(scenario_seed);
    s.parameters.seed = run_seed;
    let mut model = Model::new(&s, EventSink::memory().unwrap()).unwrap();
    let mut violations = row_sum_violations(&model);
    let mut checker = InvariantChecker::new(&model);
    for _ in 0..days {
        model.step().unwrap();
        violations.extend(checker.check(&model));
    }
    let log = model.finish_events().unwrap().unwrap();
    violations.extend(event_log_violations(&log));
    violations
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn invariants_hold_every_day(scenario_seed in 0u64..1_000, run_seed in any::<u64>()) {
        let v = checked_run(scenario_seed, run_seed, 120);
        prop_assert!(v.is_empty(), "{:?}", &v[..v.len().min(5)]);
    }
}

#[test]
fn desk_run_keeps_invariants() {
    let s = common::desk();
    let mut model = Model::new(s, EventSink::memory().unwrap()).unwrap();
    let mut checker = InvariantChecker::new(&model);
    for _ in 0..90 {
        model.step().unwrap();
        let v = checker.check(&model);
        assert!(v.is_empty(), "{v:?}");
    }
    let log = model.finish_events().unwrap().unwrap();
    assert!(event_log_violations(&log).is_empty());
}

#[test]
fn the_checker_catches_a_second_transfer_attempt() {
    let log = b"day,agent_id,event,from,to,detail\n\
                3,17,discharge,1,nh,\n\
                3,17,turned_away,1,2001,4\n\
                3,17,admit,1,2002,non_icu\n";
    assert_eq!(event_log_violations(log).len(), 1);
}

#[test]
fn the_checker_catches_movement_after_death() {
    let log = b"day,agent_id,event,from,to,detail\n\
                3,17,death,1,,\n\
                9,17,admit,community,1,non_icu\n";
    assert_eq!(event_log_violations(log).len(), 1);
}
