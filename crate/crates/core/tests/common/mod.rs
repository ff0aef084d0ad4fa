#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use patientflow::engine::Model;
use patientflow::population::Life;
use patientflow::scenario::synthetic::{generate, SyntheticSpec};
use patientflow::scenario::Scenario;
use patientflow::{AgeGroup, BedType, Category, Location};

pub const DESK_SEED: u64 = 7;
pub const RUN_SEED: u64 = 42;

pub fn desk() -> &'static Scenario {
    static DESK: OnceLock<Scenario> = OnceLock::new();
    DESK.get_or_init(|| {
        let spec = SyntheticSpec::preset("desk").expect("desk preset");
        let mut s = generate(&spec, DESK_SEED).expect("desk scenario");
        s.parameters.seed = RUN_SEED;
        s
    })
}

pub fn minimal(seed: u64) -> Scenario {
    let spec = SyntheticSpec::preset("minimal").expect("minimal preset");
    generate(&spec, seed).expect("minimal scenario")
}

/// Per-day checks of the model state against its starting state.
pub struct InvariantChecker {
    placeholders: Vec<(u32, u32)>,
    dead: HashSet<usize>,
}

impl InvariantChecker {
    pub fn new(model: &Model) -> Self {
        let mut c = InvariantChecker {
            placeholders: model
                .roster()
                .iter()
                .map(|f| (f.placeholders(BedType::NonIcu), f.placeholders(BedType::Icu)))
                .collect(),
            dead: HashSet::new(),
        };
        let v = c.check(model);
        assert!(v.is_empty(), "violations at day 0: {v:?}");
        c
    }

    /// Returns a description of every violation found.
    pub fn check(&mut self, model: &Model) -> Vec<String> {
        let mut out = Vec::new();
        let day = model.day();
        for (i, f) in model.roster().iter().enumerate() {
            for bed in [BedType::NonIcu, BedType::Icu] {
                if f.census_of(bed) > f.beds(bed) {
                    out.push(format!("day {day}: facility {} over capacity in {bed:?} beds", f.id));
                }
            }
            let ph = (f.placeholders(BedType::NonIcu), f.placeholders(BedType::Icu));
            if ph != self.placeholders[i] {
                out.push(format!("day {day}: facility {} placeholders changed", f.id));
            }
            for (id, _) in f.occupants() {
                let a = model.agent(id);
                if a.location != Location::Facility(f.id) {
                    out.push(format!(
                        "day {day}: agent {id} listed in {} but located at {}",
                        f.id, a.location
                    ));
                }
                let bad_age = match f.category {
                    Category::Nh => a.age_group != AgeGroup::Over65,
                    Category::Ltach => a.age_group == AgeGroup::Under50,
                    _ => false,
                };
                if bad_age {
                    out.push(format!("day {day}: agent {id} aged {:?} in {}", a.age_group, f.id));
                }
            }
        }
        for (i, a) in model.agents().iter().enumerate() {
            if a.life == Life::Dead {
                self.dead.insert(i);
                if a.location != Location::Community || a.leave_day.is_some() {
                    out.push(format!("day {day}: dead agent {} is in {}", a.unique_id, a.location));
                }
            } else if self.dead.contains(&i) {
                out.push(format!("day {day}: agent {} came back to life", a.unique_id));
            }
            if a.location.is_community() == a.leave_day.is_some() {
                out.push(format!(
                    "day {day}: agent {} has an inconsistent leave day",
                    a.unique_id
                ));
            }
        }
        out
    }
}

/// Every facility transition row sums to one.
pub fn row_sum_violations(model: &Model) -> Vec<String> {
    model
        .tables()
        .facility
        .rows()
        .filter_map(|r| {
            let s: f64 = r.p.iter().sum();
            ((s - 1.0).abs() > 1e-9).then(|| format!("row {:?}/{:?} sums to {s}", r.source, r.age_group))
        })
        .collect()
}

/// Scans an event log for movement after death and for transfers that
/// went past the first choice.
pub fn event_log_violations(log: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    let mut dead: HashSet<String> = HashSet::new();
    let mut transfer_attempts: BTreeMap<(u32, String), u32> = BTreeMap::new();
    let mut r = csv::Reader::from_reader(log);
    for rec in r.records() {
        let rec = rec.expect("event row");
        let day: u32 = rec[0].parse().expect("day");
        let agent = rec[1].to_string();
        let kind = &rec[2];
        let from = &rec[3];
        if dead.contains(&agent) {
            out.push(format!("day {day}: dead agent {agent} has a {kind} event"));
        }
        if kind == "death" {
            dead.insert(agent.clone());
        }
        if from != "community" && (kind == "admit" || kind == "turned_away") {
            let n = transfer_attempts.entry((day, agent.clone())).or_default();
            *n += 1;
            if *n > 1 {
                out.push(format!("day {day}: agent {agent} tried a second facility on transfer"));
            }
        }
    }
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
