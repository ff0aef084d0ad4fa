//! Event log, turned-away ledgers and run tallies.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AgentId, Category, CountyId, FacilityId, Location};

pub const EVENT_HEADER: &[&str] = &["day", "agent_id", "event", "from", "to", "detail"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Admit,
    Discharge,
    Death,
    TurnedAway,
    FullyTurnedAway,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Admit => "admit",
            EventKind::Discharge => "discharge",
            EventKind::Death => "death",
            EventKind::TurnedAway => "turned_away",
            EventKind::FullyTurnedAway => "fully_turned_away",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    None,
    Location(Location),
    Category(Category),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::None => Ok(()),
            Target::Location(l) => write!(f, "{l}"),
            Target::Category(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub day: u32,
    pub agent: AgentId,
    pub kind: EventKind,
    pub from: Location,
    pub to: Target,
    pub detail: String,
}

/// Where events go.
pub enum EventSink {
    Discard,
    Memory(csv::Writer<Vec<u8>>),
    File(csv::Writer<BufWriter<File>>, PathBuf),
}

impl std::fmt::Debug for EventSink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventSink::Discard => f.write_str("Discard"),
            EventSink::Memory(_) => f.write_str("Memory"),
            EventSink::File(_, p) => write!(f, "File({})", p.display()),
        }
    }
}

impl EventSink {
    pub fn memory() -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(EVENT_HEADER)?;
        Ok(EventSink::Memory(w))
    }

    pub fn file(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(EVENT_HEADER)?;
        Ok(EventSink::File(w, path.to_path_buf()))
    }

    pub fn is_enabled(&self) -> bool {
        !matches!(self, EventSink::Discard)
    }

    pub fn record(&mut self, e: &Event) -> Result<()> {
        if !self.is_enabled() {
            return Ok(());
        }
        let day = e.day.to_string();
        let agent = e.agent.to_string();
        let from = e.from.to_string();
        let to = e.to.to_string();
        let row = [
            day.as_str(),
            agent.as_str(),
            e.kind.label(),
            from.as_str(),
            to.as_str(),
            e.detail.as_str(),
        ];
        match self {
            EventSink::Discard => {}
            EventSink::Memory(w) => w.write_record(row)?,
            EventSink::File(w, _) => w.write_record(row)?,
        }
        Ok(())
    }

    /// Flushes the sink; the in-memory variant returns the CSV bytes.
    pub fn finish(self) -> Result<Option<Vec<u8>>> {
        match self {
            EventSink::Discard => Ok(None),
            EventSink::Memory(w) => Ok(Some(w.into_inner().map_err(|e| Error::Scenario(e.to_string()))?)),
            EventSink::File(mut w, path) => {
                w.flush().map_err(|e| Error::io(&path, e))?;
                Ok(None)
            }
        }
    }
}

/// A rejection at one facility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnedAway {
    pub day: u32,
    pub facility_id: FacilityId,
    pub county_id: CountyId,
}

/// An agent that found no bed anywhere it was allowed to try.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullyTurnedAway {
    pub day: u32,
    pub agent_id: AgentId,
    pub category: Category,
    pub county_id: CountyId,
}

/// Running moments of assigned lengths of stay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LosTally {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl LosTally {
    pub fn add(&mut self, days: u32) {
        let x = days as f64;
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Sample standard deviation.
    pub fn sd(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0).sqrt()
    }
}

/// Counts for one simulated day. Vectors follow roster order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DaySummary {
    pub day: u32,
    pub census: Vec<u32>,
    pub icu_census: Vec<u32>,
    pub admissions: u64,
    pub discharges: u64,
    pub deaths: u64,
    pub turned_away: u64,
    pub fully_turned_away: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilitySummary {
    pub facility_id: FacilityId,
    pub category: Category,
    pub beds_nonicu: u32,
    pub beds_icu: u32,
    pub placeholders_nonicu: u32,
    pub placeholders_icu: u32,
    /// Census (agents and placeholders) right after initialization.
    pub starting_census: u32,
    pub starting_icu_census: u32,
}

/// Everything the validation patterns need from a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub n_agents: u64,
    pub population_reference: u64,
    pub days_run: u32,
    pub icu_multiplier: f64,
    pub facilities: Vec<FacilitySummary>,
    pub days: Vec<DaySummary>,
    /// Assigned LOS of every admission made during the run, per facility.
    pub los: Vec<LosTally>,
    /// `moves[from][to]` by category index.
    pub moves: [[u64; 4]; 4],
    /// Deaths by category index of the facility where they happened.
    pub deaths: [u64; 4],
    pub turned_away: u64,
    pub fully_turned_away: u64,
}

impl RunReport {
    pub fn census_series(&self, facility_index: usize) -> Vec<f64> {
        self.days.iter().map(|d| d.census[facility_index] as f64).collect()
    }

    pub fn icu_series(&self) -> Vec<f64> {
        self.days
            .iter()
            .map(|d| d.icu_census.iter().sum::<u32>() as f64)
            .collect()
    }

    pub fn position(&self, id: FacilityId) -> Option<usize> {
        self.facilities.iter().position(|f| f.facility_id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn los_tally_moments() {
        let mut t = LosTally::default();
        for d in [2, 4, 4, 4, 5, 5, 7, 9] {
            t.add(d);
        }
        assert_eq!(t.mean(), 5.0);
        assert!((t.sd() - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn memory_sink_writes_csv() {
        let mut s = EventSink::memory().unwrap();
        s.record(&Event {
            day: 3,
            agent: AgentId(7),
            kind: EventKind::Admit,
            from: Location::Community,
            to: Target::Location(Location::Facility(FacilityId(12))),
            detail: "icu".into(),
        })
        .unwrap();
        s.record(&Event {
            day: 3,
            agent: AgentId(8),
            kind: EventKind::FullyTurnedAway,
            from: Location::Community,
            to: Target::Category(Category::Nh),
            detail: "5".into(),
        })
        .unwrap();
        let text = String::from_utf8(s.finish().unwrap().unwrap()).unwrap();
        assert_eq!(
            text,
            "day,agent_id,event,from,to,detail\n3,7,admit,community,12,icu\n3,8,fully_turned_away,community,nh,5\n"
        );
    }
}
