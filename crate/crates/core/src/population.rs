//! Synthetic population handling and the agent roster.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AgeGroup, AgentId, BedType, CountyId, FacilityId, Location};

pub const MAX_AGE_YEARS: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

/// One row of the synthetic population file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonRow {
    #[serde(rename = "county_id")]
    pub county: CountyId,
    pub sex: Sex,
    pub age_years: u32,
}

impl PersonRow {
    pub fn age_group(&self) -> AgeGroup {
        bin_age_years(self.age_years)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Life {
    Alive,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub unique_id: AgentId,
    pub age_group: AgeGroup,
    pub county: CountyId,
    pub sex: Sex,
    pub concurrent_conditions: bool,
    pub location: Location,
    pub life: Life,
    /// Model day on which the current stay ends; set iff at a facility.
    pub leave_day: Option<u32>,
    pub previous_location: Option<Location>,
    pub current_bed: Option<BedType>,
}

impl Agent {
    pub fn is_alive(&self) -> bool {
        self.life == Life::Alive
    }

    pub fn facility(&self) -> Option<FacilityId> {
        self.location.facility()
    }
}

/// `<50 → 0`, `50-64 → 1`, `65+ → 2`.
pub fn bin_age(age_years: i64) -> Result<AgeGroup> {
    if age_years < 0 {
        return Err(Error::input(format!("negative age {age_years}")));
    }
    Ok(bin_age_years(age_years as u32))
}

fn bin_age_years(age: u32) -> AgeGroup {
    match age {
        0..=49 => AgeGroup::Under50,
        50..=64 => AgeGroup::From50To64,
        _ => AgeGroup::Over65,
    }
}

/// Grows `rows` to `target` by appending uniformly drawn duplicates.
pub fn expand_population<R: Rng + ?Sized>(rows: &[PersonRow], target: usize, rng: &mut R) -> Result<Vec<PersonRow>> {
    if rows.is_empty() {
        return Err(Error::input("cannot expand an empty population"));
    }
    if target < rows.len() {
        return Err(Error::input(format!(
            "population target {target} is smaller than the {} source rows",
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(target);
    out.extend_from_slice(rows);
    for _ in rows.len()..target {
        out.push(rows[rng.random_range(0..rows.len())]);
    }
    Ok(out)
}

/// Probability of carrying a concurrent condition, per age group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComorbidityRates(pub [f64; 3]);

impl Default for ComorbidityRates {
    fn default() -> Self {
        ComorbidityRates([0.0, 0.2374, 0.5497])
    }
}

pub fn assign_comorbidity<R: Rng + ?Sized>(age_group: AgeGroup, rates: &ComorbidityRates, rng: &mut R) -> bool {
    let p = rates.0[age_group.index()];
    p > 0.0 && rng.random::<f64>() < p
}

/// Draws `n` rows without replacement, each row equally likely, and turns
/// them into community-dwelling agents with ids `0..n` in draw order.
pub fn sample_agents<R: Rng + ?Sized>(
    rows: &[PersonRow],
    n: usize,
    rates: &ComorbidityRates,
    rng: &mut R,
) -> Result<Vec<Agent>> {
    if n == 0 || n > rows.len() {
        return Err(Error::input(format!(
            "cannot sample {n} agents from {} population rows",
            rows.len()
        )));
    }
    let picks = rand::seq::index::sample(rng, rows.len(), n);
    let mut agents = Vec::with_capacity(n);
    for (i, row_idx) in picks.iter().enumerate() {
        let row = rows[row_idx];
        let age_group = row.age_group();
        agents.push(Agent {
            unique_id: AgentId(i as u32),
            age_group,
            county: row.county,
            sex: row.sex,
            concurrent_conditions: false,
            location: Location::Community,
            life: Life::Alive,
            leave_day: None,
            previous_location: None,
            current_bed: None,
        });
    }
    for agent in &mut agents {
        agent.concurrent_conditions = assign_comorbidity(agent.age_group, rates, rng);
    }
    Ok(agents)
}
