mod common;

use patientflow::engine::{EventSink, Model};

#[test]
fn split_run_matches_a_single_run() {
    let s = common::desk();
    let mut whole = Model::new(s, EventSink::memory().unwrap()).unwrap();
    whole.run(365).unwrap();
    let mut split = Model::new(s, EventSink::memory().unwrap()).unwrap();
    split.run(100).unwrap();
    split.run(265).unwrap();

    let (a, b) = (whole.report(), split.report());
    assert_eq!(a.days_run, 365);
    assert_eq!(a.days, b.days);
    assert_eq!(a.moves, b.moves);
    assert_eq!(a.deaths, b.deaths);
    assert_eq!(whole.finish_events().unwrap(), split.finish_events().unwrap());
}

#[test]
fn different_seeds_give_different_histories() {
    let mut s = common::minimal(3);
    let mut logs = Vec::new();
    for seed in [1, 2] {
        s.parameters.seed = seed;
        let mut m = Model::new(&s, EventSink::memory().unwrap()).unwrap();
        m.run(60).unwrap();
        logs.push(m.finish_events().unwrap().unwrap());
    }
    assert_ne!(logs[0], logs[1]);
}

#[test]
fn zero_days_is_rejected() {
    let s = common::minimal(3);
    let mut m = Model::new(&s, EventSink::Discard).unwrap();
    assert!(m.run(0).is_err());
}
