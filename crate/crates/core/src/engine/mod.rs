//! Model state, initialization and the daily step loop.
//!
//! Every stochastic decision draws from one seeded stream in a fixed order:
//! initialization, then per day the community scan in ascending agent id,
//! the shuffle of the day's actions, and the actions themselves.

pub mod choice;
pub mod events;
pub mod icu;
pub mod init;
pub mod movement;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::ids::{AgentId, BedType, Category, CountyId, FacilityId, Location};
use crate::los::LosDistribution;
use crate::network::FacilityRoster;
use crate::population::Agent;
use crate::rng::SimRng;
use crate::scenario::{Distances, Parameters, Scenario};
use crate::transitions::TransitionTables;

pub use choice::ChoiceTables;
pub use events::{
    DaySummary, Event, EventKind, EventSink, FacilitySummary, FullyTurnedAway, LosTally, RunReport, Target, TurnedAway,
};
pub use icu::IcuModel;
pub use init::StartingCapacity;
pub use movement::{Action, ActionKind};

/// The full simulation state.
#[derive(Debug)]
pub struct Model {
    params: Parameters,
    day: u32,
    agents: Vec<Agent>,
    roster: FacilityRoster,
    tables: TransitionTables,
    distances: Distances,
    choice: ChoiceTables,
    /// Per roster index.
    los: Vec<LosDistribution>,
    icu: IcuModel,
    rng: SimRng,
    /// Agents whose stay ends on a given day.
    calendar: BTreeMap<u32, Vec<AgentId>>,
    /// Daily `(p_hospital, p_nh)` per agent.
    community_rates: Vec<(f64, f64)>,
    /// Same-category facilities in each county, nearest first.
    home: BTreeMap<(Category, CountyId), Vec<FacilityId>>,
    /// Facilities within range of each county, nearest first.
    in_range: BTreeMap<(Category, CountyId), Vec<FacilityId>>,
    starting: BTreeMap<FacilityId, StartingCapacity>,
    facility_summaries: Vec<FacilitySummary>,
    events: EventSink,
    turned_away: Vec<TurnedAway>,
    fully_turned_away: Vec<FullyTurnedAway>,
    days: Vec<DaySummary>,
    today: DaySummary,
    los_tally: Vec<LosTally>,
    moves: [[u64; 4]; 4],
    deaths: [u64; 4],
}

impl Model {
    /// Builds and initializes a model from a scenario. The scenario's
    /// parameters (seed, agent count, ...) are used as given.
    pub fn new(scenario: &Scenario, events: EventSink) -> Result<Model> {
        init::initialize(scenario, events)
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    /// The next day to be simulated.
    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.index()]
    }

    pub fn roster(&self) -> &FacilityRoster {
        &self.roster
    }

    pub fn tables(&self) -> &TransitionTables {
        &self.tables
    }

    pub fn distances(&self) -> &Distances {
        &self.distances
    }

    pub fn choice(&self) -> &ChoiceTables {
        &self.choice
    }

    pub fn icu_model(&self) -> &IcuModel {
        &self.icu
    }

    pub fn los_distribution(&self, facility: FacilityId) -> Option<&LosDistribution> {
        self.roster.position(facility).map(|i| &self.los[i])
    }

    pub fn starting_capacity(&self) -> &BTreeMap<FacilityId, StartingCapacity> {
        &self.starting
    }

    pub fn facility_summaries(&self) -> &[FacilitySummary] {
        &self.facility_summaries
    }

    pub fn turned_away(&self) -> &[TurnedAway] {
        &self.turned_away
    }

    pub fn fully_turned_away(&self) -> &[FullyTurnedAway] {
        &self.fully_turned_away
    }

    pub fn day_summaries(&self) -> &[DaySummary] {
        &self.days
    }

    pub fn moves(&self) -> &[[u64; 4]; 4] {
        &self.moves
    }

    /// Simulates `self.day`, then advances the clock by one.
    pub fn step(&mut self) -> Result<&DaySummary> {
        let day = self.day;
        self.today = DaySummary {
            day,
            ..DaySummary::default()
        };
        let mut actions = self.select_community_moves();
        actions.extend(self.select_discharges());
        actions.shuffle(&mut self.rng);
        for action in actions {
            self.execute(action)?;
        }
        let mut summary = std::mem::take(&mut self.today);
        summary.census = self.roster.census();
        summary.icu_census = self.roster.iter().map(|f| f.census_of(BedType::Icu)).collect();
        self.days.push(summary);
        self.day += 1;
        Ok(self.days.last().expect("just pushed"))
    }

    pub fn run(&mut self, days: u32) -> Result<()> {
        if days == 0 {
            return Err(Error::input("days must be at least 1"));
        }
        for _ in 0..days {
            self.step()?;
        }
        Ok(())
    }

    /// Raw tallies of everything simulated so far.
    pub fn report(&self) -> RunReport {
        RunReport {
            seed: self.params.seed,
            n_agents: self.params.n_agents,
            population_reference: self.params.population_reference,
            days_run: self.days.len() as u32,
            icu_multiplier: self.icu.multiplier,
            facilities: self.facility_summaries.clone(),
            days: self.days.clone(),
            los: self.los_tally.clone(),
            moves: self.moves,
            deaths: self.deaths,
            turned_away: self.turned_away.len() as u64,
            fully_turned_away: self.fully_turned_away.len() as u64,
        }
    }

    /// Flushes the event log; returns the bytes for an in-memory sink.
    pub fn finish_events(&mut self) -> Result<Option<Vec<u8>>> {
        std::mem::replace(&mut self.events, EventSink::Discard).finish()
    }

    fn log(&mut self, agent: AgentId, kind: EventKind, from: Location, to: Target, detail: String) -> Result<()> {
        if !self.events.is_enabled() {
            return Ok(());
        }
        self.events.record(&Event {
            day: self.day,
            agent,
            kind,
            from,
            to,
            detail,
        })
    }

    fn category_of(&self, location: Location) -> Category {
        match location {
            Location::Community => Category::Community,
            Location::Facility(id) => self.roster.get(id).map_or(Category::Community, |f| f.category),
        }
    }
}
