//! Facility nodes, bed scaling and occupancy bookkeeping.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geography::GeoPoint;
use crate::ids::{AgentId, BedType, Category, CountyId, FacilityId};
use crate::population::Agent;

/// Row of the STACH roster file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StachRecord {
    pub facility_id: FacilityId,
    pub name: String,
    pub county_id: CountyId,
    pub lat: f64,
    pub lon: f64,
    pub beds_nonicu: u32,
    pub beds_icu: u32,
    pub pct_out_of_state: f64,
}

/// Row of the LTACH roster file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtachRecord {
    pub facility_id: FacilityId,
    pub name: String,
    pub county_id: CountyId,
    pub lat: f64,
    pub lon: f64,
    pub beds: u32,
}

/// Row of the nursing home roster file. `starting_occupancy` is a resident
/// count at reference-population scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NhRecord {
    pub facility_id: FacilityId,
    pub name: String,
    pub county_id: CountyId,
    pub lat: f64,
    pub lon: f64,
    pub beds: u32,
    pub starting_occupancy: u32,
}

/// `max(1, round_half_up(beds · n / p))`, in exact integer arithmetic.
pub fn scale_beds(beds: u32, n: u64, p: u64) -> u32 {
    if p == 0 {
        return beds.max(1);
    }
    let num = 2 * beds as u128 * n as u128 + p as u128;
    let scaled = num / (2 * p as u128);
    (scaled as u32).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BedRequest {
    Icu,
    NonIcu,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmitOutcome {
    Admitted(BedType),
    Full,
}

#[derive(Debug, Clone)]
pub struct Facility {
    pub id: FacilityId,
    pub name: String,
    pub category: Category,
    pub county: CountyId,
    pub geocode: GeoPoint,
    /// Unscaled input bed counts (ICU is 0 outside hospitals).
    pub input_beds_nonicu: u32,
    pub input_beds_icu: u32,
    beds: [u32; 2],
    placeholders: [u32; 2],
    placeholders_locked: bool,
    occupied: [u32; 2],
    occupants: BTreeMap<AgentId, BedType>,
}

fn slot(bed: BedType) -> usize {
    match bed {
        BedType::NonIcu => 0,
        BedType::Icu => 1,
    }
}

impl Facility {
    pub fn new(
        id: FacilityId,
        name: impl Into<String>,
        category: Category,
        county: CountyId,
        geocode: GeoPoint,
        beds_nonicu: u32,
        beds_icu: u32,
    ) -> Result<Self> {
        if category == Category::Community {
            return Err(Error::input("the community is not a bedded facility"));
        }
        if category != Category::Stach && beds_icu > 0 {
            return Err(Error::input(format!("{category} facility {id} cannot have ICU beds")));
        }
        Ok(Facility {
            id,
            name: name.into(),
            category,
            county,
            geocode,
            input_beds_nonicu: beds_nonicu,
            input_beds_icu: beds_icu,
            beds: [beds_nonicu, beds_icu],
            placeholders: [0, 0],
            placeholders_locked: false,
            occupied: [0, 0],
            occupants: BTreeMap::new(),
        })
    }

    /// Replaces bed counts with their population-scaled values.
    pub fn scale_to(&mut self, n: u64, p: u64) {
        self.beds[0] = scale_beds(self.input_beds_nonicu, n, p);
        self.beds[1] = if self.input_beds_icu > 0 {
            scale_beds(self.input_beds_icu, n, p)
        } else {
            0
        };
    }

    pub fn beds(&self, bed: BedType) -> u32 {
        self.beds[slot(bed)]
    }

    pub fn total_beds(&self) -> u32 {
        self.beds[0] + self.beds[1]
    }

    pub fn placeholders(&self, bed: BedType) -> u32 {
        self.placeholders[slot(bed)]
    }

    pub fn total_placeholders(&self) -> u32 {
        self.placeholders[0] + self.placeholders[1]
    }

    /// Sets the immovable out-of-state occupants. Allowed once.
    pub fn set_placeholders(&mut self, nonicu: u32, icu: u32) -> Result<()> {
        if self.placeholders_locked {
            return Err(Error::logic(format!(
                "placeholders of facility {} already set",
                self.id
            )));
        }
        for (bed, count) in [(BedType::NonIcu, nonicu), (BedType::Icu, icu)] {
            if count + self.occupied[slot(bed)] > self.beds(bed) {
                return Err(Error::logic(format!(
                    "{count} {} placeholders exceed free beds at facility {}",
                    bed.label(),
                    self.id
                )));
            }
        }
        self.placeholders = [nonicu, icu];
        self.placeholders_locked = true;
        Ok(())
    }

    pub fn occupied(&self, bed: BedType) -> u32 {
        self.occupied[slot(bed)]
    }

    pub fn free_beds(&self, bed: BedType) -> u32 {
        let s = slot(bed);
        self.beds[s] - self.placeholders[s] - self.occupied[s]
    }

    pub fn has_open_bed(&self, req: BedRequest) -> bool {
        match req {
            BedRequest::Icu => self.free_beds(BedType::Icu) > 0,
            BedRequest::NonIcu => self.free_beds(BedType::NonIcu) > 0,
            BedRequest::Any => self.free_beds(BedType::Icu) + self.free_beds(BedType::NonIcu) > 0,
        }
    }

    /// Agents plus placeholders in beds of this type.
    pub fn census_of(&self, bed: BedType) -> u32 {
        self.occupied(bed) + self.placeholders(bed)
    }

    /// Agents plus placeholders.
    pub fn census(&self) -> u32 {
        self.census_of(BedType::NonIcu) + self.census_of(BedType::Icu)
    }

    pub fn agent_count(&self) -> u32 {
        self.occupied[0] + self.occupied[1]
    }

    pub fn occupants(&self) -> impl Iterator<Item = (AgentId, BedType)> + '_ {
        self.occupants.iter().map(|(a, b)| (*a, *b))
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.occupants.contains_key(&agent)
    }

    /// Takes a bed of exactly the requested type.
    pub fn admit(&mut self, agent: &Agent, bed: BedType) -> Result<AdmitOutcome> {
        if !agent.is_alive() {
            return Err(Error::logic(format!("cannot admit dead agent {}", agent.unique_id)));
        }
        if self.occupants.contains_key(&agent.unique_id) {
            return Err(Error::logic(format!(
                "agent {} is already at facility {}",
                agent.unique_id, self.id
            )));
        }
        if self.free_beds(bed) == 0 {
            return Ok(AdmitOutcome::Full);
        }
        self.occupied[slot(bed)] += 1;
        self.occupants.insert(agent.unique_id, bed);
        Ok(AdmitOutcome::Admitted(bed))
    }

    /// Takes the preferred bed type, or any open bed of the other type.
    pub fn admit_any(&mut self, agent: &Agent, preferred: BedType) -> Result<AdmitOutcome> {
        match self.admit(agent, preferred)? {
            AdmitOutcome::Full if self.beds(preferred.other()) > 0 => self.admit(agent, preferred.other()),
            outcome => Ok(outcome),
        }
    }

    pub fn discharge(&mut self, agent: AgentId) -> Result<BedType> {
        let bed = self
            .occupants
            .remove(&agent)
            .ok_or_else(|| Error::logic(format!("agent {agent} is not an occupant of facility {}", self.id)))?;
        self.occupied[slot(bed)] -= 1;
        Ok(bed)
    }
}

/// All facility nodes, indexed by id and by category.
#[derive(Debug, Clone, Default)]
pub struct FacilityRoster {
    facilities: Vec<Facility>,
    index: HashMap<FacilityId, usize>,
    by_category: [Vec<usize>; 4],
}

impl FacilityRoster {
    pub fn new(facilities: Vec<Facility>) -> Result<Self> {
        let mut roster = FacilityRoster::default();
        for f in facilities {
            roster.push(f)?;
        }
        Ok(roster)
    }

    pub fn push(&mut self, facility: Facility) -> Result<()> {
        if self.index.contains_key(&facility.id) {
            return Err(Error::input(format!("duplicate facility id {}", facility.id)));
        }
        let i = self.facilities.len();
        self.index.insert(facility.id, i);
        self.by_category[facility.category.index()].push(i);
        self.facilities.push(facility);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.facilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facilities.is_empty()
    }

    pub fn position(&self, id: FacilityId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn get(&self, id: FacilityId) -> Option<&Facility> {
        self.position(id).map(|i| &self.facilities[i])
    }

    pub fn get_mut(&mut self, id: FacilityId) -> Option<&mut Facility> {
        self.position(id).map(move |i| &mut self.facilities[i])
    }

    pub fn at(&self, i: usize) -> &Facility {
        &self.facilities[i]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut Facility {
        &mut self.facilities[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Facility> {
        self.facilities.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Facility> {
        self.facilities.iter_mut()
    }

    pub fn of_category(&self, category: Category) -> impl Iterator<Item = &Facility> {
        self.by_category[category.index()].iter().map(|&i| &self.facilities[i])
    }

    pub fn count(&self, category: Category) -> usize {
        self.by_category[category.index()].len()
    }

    pub fn census(&self) -> Vec<u32> {
        self.facilities.iter().map(Facility::census).collect()
    }
}
