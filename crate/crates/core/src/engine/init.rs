//! Building the model: roster scaling, starting capacities, placeholders and
//! the initial placement of agents into facilities.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::choice::{county_weights, pick_weighted, ChoiceTables};
use super::events::{DaySummary, EventKind, FacilitySummary, LosTally, Target};
use super::icu::{calibrate_multiplier, IcuDemand, IcuModel};
use super::Model;
use crate::error::{Error, Result};
use crate::geography::GeoPoint;
use crate::ids::{AgeGroup, AgentId, BedType, Category, CountyId, FacilityId, Location};
use crate::los::{age_distribution_with, fit_los, AgingConfig, RemainingLosDistribution};
use crate::network::{AdmitOutcome, Facility, FacilityRoster};
use crate::population::{expand_population, sample_agents, Agent};
use crate::rng::{seeded, SimRng};
use crate::scenario::{CapacityOverride, IcuMultiplier, Parameters, Scenario};
use crate::transitions::{population_counts, HospitalRecord, TransitionInputs, TransitionTables};

/// Draws allowed while looking for an eligible agent for one bed.
const MAX_PLACEMENT_DRAWS: usize = 100_000;

/// Starting occupancy of a hospital, placeholders included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartingCapacity {
    pub nonicu: u32,
    pub icu: u32,
}

fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor().max(0.0) as u32
}

/// `round(capacity × share)`.
pub fn assign_placeholders(capacity: u32, out_of_state_share: f64) -> u32 {
    round_half_up(capacity as f64 * out_of_state_share).min(capacity)
}

/// Occupied hospital beds at day 0.
///
/// Each hospital's expected non-ICU census is `H_c = (NB/TB) · H_TP · LOS/365`.
/// The ratio `R` of the fill parameter to the fleet's expected occupancy
/// (`ΣH_c / ΣNB`) rescales every hospital, so the fleet starts at the fill
/// while keeping relative differences: `round(R · H_c/NB · scaled NB)`.
/// ICU beds work the same way with the ICU fill. With overrides, the
/// supplied per-hospital fills are applied to the scaled beds instead.
pub fn compute_starting_capacity(
    records: &[HospitalRecord],
    roster: &FacilityRoster,
    params: &Parameters,
    overrides: Option<&[CapacityOverride]>,
) -> Result<BTreeMap<FacilityId, StartingCapacity>> {
    if !(params.non_icu_fill > 0.0 && params.icu_fill > 0.0) {
        return Err(Error::input("starting fills must be positive"));
    }
    let mut out = BTreeMap::new();
    if let Some(rows) = overrides.filter(|_| params.use_facility_capacity_overrides) {
        let by: BTreeMap<FacilityId, &CapacityOverride> = rows.iter().map(|r| (r.facility_id, r)).collect();
        for r in records {
            let f = roster
                .get(r.facility_id)
                .ok_or_else(|| Error::logic(format!("hospital {} missing from roster", r.facility_id)))?;
            let o = by
                .get(&r.facility_id)
                .ok_or_else(|| Error::input(format!("no capacity override for hospital {}", r.facility_id)))?;
            out.insert(
                r.facility_id,
                StartingCapacity {
                    nonicu: round_half_up(o.nonicu_fill * f.beds(BedType::NonIcu) as f64).min(f.beds(BedType::NonIcu)),
                    icu: round_half_up(o.icu_fill * f.beds(BedType::Icu) as f64).min(f.beds(BedType::Icu)),
                },
            );
        }
        return Ok(out);
    }

    let expected = |r: &HospitalRecord, beds: u32| -> f64 {
        let tb = r.total_beds() as f64;
        if tb == 0.0 {
            0.0
        } else {
            beds as f64 / tb * r.total_discharges as f64 * r.mean_los / 365.0
        }
    };
    let (mut hc, mut nb, mut ic, mut ib) = (0.0, 0.0, 0.0, 0.0);
    for r in records {
        hc += expected(r, r.beds_nonicu);
        nb += r.beds_nonicu as f64;
        ic += expected(r, r.beds_icu);
        ib += r.beds_icu as f64;
    }
    let ratio = |fill: f64, h: f64, b: f64| if h > 0.0 { fill / (h / b) } else { 0.0 };
    let r_nonicu = ratio(params.non_icu_fill, hc, nb);
    let r_icu = ratio(params.icu_fill, ic, ib);
    for r in records {
        let f = roster
            .get(r.facility_id)
            .ok_or_else(|| Error::logic(format!("hospital {} missing from roster", r.facility_id)))?;
        let count = |input_beds: u32, rr: f64, bed: BedType| -> u32 {
            let scaled = f.beds(bed);
            if input_beds == 0 || scaled == 0 {
                return 0;
            }
            let frac = expected(r, input_beds) / input_beds as f64;
            round_half_up(rr * frac * scaled as f64).min(scaled)
        };
        out.insert(
            r.facility_id,
            StartingCapacity {
                nonicu: count(r.beds_nonicu, r_nonicu, BedType::NonIcu),
                icu: count(r.beds_icu, r_icu, BedType::Icu),
            },
        );
    }
    Ok(out)
}

/// Community agents available for initial placement, by county and age.
#[derive(Debug, Default)]
struct CommunityPool {
    by: BTreeMap<(CountyId, AgeGroup), Vec<AgentId>>,
}

impl CommunityPool {
    fn new(agents: &[Agent]) -> Self {
        let mut by: BTreeMap<(CountyId, AgeGroup), Vec<AgentId>> = BTreeMap::new();
        for a in agents {
            by.entry((a.county, a.age_group)).or_default().push(a.unique_id);
        }
        CommunityPool { by }
    }

    fn take(&mut self, county: CountyId, age: AgeGroup, rng: &mut SimRng) -> Option<AgentId> {
        let v = self.by.get_mut(&(county, age))?;
        if v.is_empty() {
            return None;
        }
        let i = rng.random_range(0..v.len());
        Some(v.swap_remove(i))
    }

    fn has_any(&self, age_ok: impl Fn(AgeGroup) -> bool) -> bool {
        self.by.iter().any(|((_, g), v)| age_ok(*g) && !v.is_empty())
    }
}

fn build_roster(scenario: &Scenario, tables: &TransitionTables, params: &Parameters) -> Result<FacilityRoster> {
    let mut roster = FacilityRoster::default();
    for h in &tables.hospitals {
        let rec = scenario
            .stach
            .iter()
            .find(|s| s.facility_id == h.facility_id)
            .expect("records come from the roster");
        roster.push(Facility::new(
            rec.facility_id,
            rec.name.clone(),
            Category::Stach,
            rec.county_id,
            GeoPoint::new(rec.lat, rec.lon)?,
            rec.beds_nonicu,
            rec.beds_icu,
        )?)?;
    }
    for r in &scenario.ltach {
        roster.push(Facility::new(
            r.facility_id,
            r.name.clone(),
            Category::Ltach,
            r.county_id,
            GeoPoint::new(r.lat, r.lon)?,
            r.beds,
            0,
        )?)?;
    }
    for r in &scenario.nh {
        roster.push(Facility::new(
            r.facility_id,
            r.name.clone(),
            Category::Nh,
            r.county_id,
            GeoPoint::new(r.lat, r.lon)?,
            r.beds,
            0,
        )?)?;
    }
    for f in roster.iter_mut() {
        f.scale_to(params.n_agents, params.population_reference);
    }
    Ok(roster)
}

pub(super) fn initialize(scenario: &Scenario, events: super::EventSink) -> Result<Model> {
    let params = scenario.parameters.clone();
    params.validate()?;
    scenario.validate()?;
    let mut rng = seeded(params.seed);

    let expanded = expand_population(&scenario.population, params.population_reference as usize, &mut rng)?;
    let population = population_counts(&expanded);
    let ltach_beds: u64 = scenario.ltach.iter().map(|r| r.beds as u64).sum();
    let tables = TransitionTables::build(
        &TransitionInputs {
            stach: &scenario.stach,
            ltach_beds,
            nh: &scenario.nh,
            los: &scenario.los,
            county_shares: &scenario.county_shares,
            discharges: &scenario.discharges,
            community_admissions: &scenario.community_admissions,
            population: &population,
        },
        &params,
    )?;
    for w in &tables.warnings {
        log::warn!("{w}");
    }
    let agents = sample_agents(&expanded, params.n_agents as usize, &params.comorbidity(), &mut rng)?;
    drop(expanded);

    let roster = build_roster(scenario, &tables, &params)?;
    let distances = scenario.distances()?;
    let ids_of = |c: Category| roster.of_category(c).map(|f| f.id).collect::<Vec<_>>();
    let choice = ChoiceTables::build(
        &tables.hospitals,
        &ids_of(Category::Ltach),
        &ids_of(Category::Nh),
        &distances,
        &params,
    )?;

    let ltach_los = fit_los(params.ltach_los_mean, params.ltach_los_sd)?;
    let mut los = Vec::with_capacity(roster.len());
    for f in roster.iter() {
        let dist = match f.category {
            Category::Stach => {
                let r = tables.hospital(f.id).expect("roster hospitals have records");
                fit_los(r.mean_los, r.sd_los)?
            }
            Category::Ltach => ltach_los.clone(),
            _ => {
                let r = scenario
                    .los_row(f.id)
                    .ok_or_else(|| Error::input(format!("nursing home {} has no LOS row", f.id)))?;
                fit_los(r.mean_los_days, r.sd_los_days)?
            }
        };
        los.push(dist);
    }

    let aging = AgingConfig {
        cohort_draws: params.aging_cohort_draws as usize,
        ..AgingConfig::default()
    };
    let mut aged: Vec<Option<RemainingLosDistribution>> = vec![None; roster.len()];
    let mut ltach_aged: Option<RemainingLosDistribution> = None;
    for (i, f) in roster.iter().enumerate() {
        if f.category == Category::Ltach {
            if ltach_aged.is_none() {
                ltach_aged = Some(age_distribution_with(&ltach_los, &aging, &mut rng));
            }
            aged[i] = ltach_aged.clone();
        } else {
            aged[i] = Some(age_distribution_with(&los[i], &aging, &mut rng));
        }
    }

    let mut home = BTreeMap::new();
    let mut in_range = BTreeMap::new();
    for cat in Category::FACILITIES {
        let matrix = distances.get(cat).expect("facility category");
        let members: Vec<FacilityId> = ids_of(cat);
        for &county in matrix.counties() {
            let near: Vec<FacilityId> = matrix
                .within(county, params.max_distance)?
                .into_iter()
                .map(|(f, _)| f)
                .filter(|f| members.contains(f))
                .collect();
            let mut local: Vec<(FacilityId, f64)> = roster
                .of_category(cat)
                .filter(|f| f.county == county)
                .map(|f| (f.id, matrix.get(county, f.id).unwrap_or(f64::INFINITY)))
                .collect();
            local.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let limit = match cat {
                Category::Ltach => params.ltach_closest_n as usize,
                Category::Nh => params.nursing_home_closest_n as usize,
                _ => usize::MAX,
            };
            home.insert((cat, county), local.into_iter().map(|(f, _)| f).collect());
            in_range.insert((cat, county), near.into_iter().take(limit).collect());
        }
    }

    let community_rates = agents
        .iter()
        .map(|a| {
            let r = tables.community.get(a.county, a.age_group);
            (r.p_hospital, r.p_nh)
        })
        .collect();
    let starting = compute_starting_capacity(
        &tables.hospitals,
        &roster,
        &params,
        scenario.capacity_overrides.as_deref(),
    )?;
    let n_facilities = roster.len();
    let mut model = Model {
        icu: IcuModel::from_params(&params, 1.0),
        params,
        day: 0,
        agents,
        roster,
        tables,
        distances,
        choice,
        los,
        rng,
        calendar: BTreeMap::new(),
        community_rates,
        home,
        in_range,
        starting,
        facility_summaries: Vec::new(),
        events,
        turned_away: Vec::new(),
        fully_turned_away: Vec::new(),
        days: Vec::new(),
        today: DaySummary::default(),
        los_tally: vec![LosTally::default(); n_facilities],
        moves: [[0; 4]; 4],
        deaths: [0; 4],
    };

    let mut pool = CommunityPool::new(&model.agents);
    model.fill_hospitals(&mut pool, &aged)?;
    model.fill_ltachs(&mut pool, &aged)?;
    model.fill_nursing_homes(&mut pool, &aged)?;
    model.calibrate_icu()?;
    model.facility_summaries = model
        .roster
        .iter()
        .map(|f| FacilitySummary {
            facility_id: f.id,
            category: f.category,
            beds_nonicu: f.beds(BedType::NonIcu),
            beds_icu: f.beds(BedType::Icu),
            placeholders_nonicu: f.placeholders(BedType::NonIcu),
            placeholders_icu: f.placeholders(BedType::Icu),
            starting_census: f.census(),
            starting_icu_census: f.census_of(BedType::Icu),
        })
        .collect();
    Ok(model)
}

impl Model {
    fn place_initial(&mut self, id: AgentId, fidx: usize, bed: BedType, remaining: u32) -> Result<()> {
        let fid = self.roster.at(fidx).id;
        let agent = &self.agents[id.index()];
        match self.roster.at_mut(fidx).admit(agent, bed)? {
            AdmitOutcome::Admitted(_) => {}
            AdmitOutcome::Full => {
                return Err(Error::logic(format!("initial placement overfilled facility {fid}")));
            }
        }
        let a = &mut self.agents[id.index()];
        a.location = Location::Facility(fid);
        a.leave_day = Some(remaining);
        a.current_bed = Some(bed);
        self.calendar.entry(remaining).or_default().push(id);
        self.log(
            id,
            EventKind::Admit,
            Location::Community,
            Target::Location(Location::Facility(fid)),
            format!("init:{}", bed.label()),
        )
    }

    fn draw_agent(
        &mut self,
        pool: &mut CommunityPool,
        facility: FacilityId,
        mut pick: impl FnMut(&mut SimRng) -> (Option<CountyId>, AgeGroup),
        age_ok: impl Fn(AgeGroup) -> bool,
    ) -> Result<AgentId> {
        for _ in 0..MAX_PLACEMENT_DRAWS {
            let (county, age) = pick(&mut self.rng);
            if let Some(c) = county {
                if let Some(id) = pool.take(c, age, &mut self.rng) {
                    return Ok(id);
                }
            }
            if !pool.has_any(&age_ok) {
                break;
            }
        }
        Err(Error::Scenario(format!(
            "no eligible community agent left to place in facility {facility}"
        )))
    }

    fn fill_hospitals(&mut self, pool: &mut CommunityPool, aged: &[Option<RemainingLosDistribution>]) -> Result<()> {
        let ages = self.tables.age_distribution.0;
        let age_options: Vec<(AgeGroup, f64)> = AgeGroup::ALL.iter().map(|g| (*g, ages[g.index()])).collect();
        let hospitals: Vec<usize> = (0..self.roster.len())
            .filter(|&i| self.roster.at(i).category == Category::Stach)
            .collect();
        for fidx in hospitals {
            let fid = self.roster.at(fidx).id;
            let record = self.tables.hospital(fid).expect("hospital record").clone();
            let start = self.starting.get(&fid).copied().unwrap_or_default();
            let ph_n = assign_placeholders(start.nonicu, record.out_of_state_share);
            let ph_i = assign_placeholders(start.icu, record.out_of_state_share);
            self.roster.at_mut(fidx).set_placeholders(ph_n, ph_i)?;
            let total: u64 = record.county_discharges.iter().map(|(_, n)| n).sum();
            let counties: Vec<(CountyId, f64)> = record
                .county_discharges
                .iter()
                .filter(|(_, n)| *n > 0)
                .map(|(c, n)| (*c, *n as f64 / total as f64))
                .collect();
            let rd = aged[fidx].clone().expect("aged distribution");
            for (bed, n) in [(BedType::NonIcu, start.nonicu - ph_n), (BedType::Icu, start.icu - ph_i)] {
                for _ in 0..n {
                    let id = self.draw_agent(
                        pool,
                        fid,
                        |rng| {
                            let c = pick_weighted(&counties, rng.random());
                            let g = pick_weighted(&age_options, rng.random()).expect("age options");
                            (c, g)
                        },
                        |_| true,
                    )?;
                    let remaining = rd.sample(&mut self.rng);
                    self.place_initial(id, fidx, bed, remaining)?;
                }
            }
        }
        Ok(())
    }

    fn fill_ltachs(&mut self, pool: &mut CommunityPool, aged: &[Option<RemainingLosDistribution>]) -> Result<()> {
        let share_65 = self.params.ltach_65_plus;
        let fill = self.params.ltach_fill;
        let ltachs: Vec<usize> = (0..self.roster.len())
            .filter(|&i| self.roster.at(i).category == Category::Ltach)
            .collect();
        for fidx in ltachs {
            let fid = self.roster.at(fidx).id;
            let beds = self.roster.at(fidx).beds(BedType::NonIcu);
            let n = round_half_up(fill * beds as f64).min(beds);
            let weights = county_weights(&self.distances.ltach, fid)?;
            let rd = aged[fidx].clone().expect("aged distribution");
            for _ in 0..n {
                let id = self.draw_agent(
                    pool,
                    fid,
                    |rng| {
                        let c = pick_weighted(&weights, rng.random());
                        let g = if rng.random::<f64>() < share_65 {
                            AgeGroup::Over65
                        } else {
                            AgeGroup::From50To64
                        };
                        (c, g)
                    },
                    |g| g != AgeGroup::Under50,
                )?;
                let remaining = rd.sample(&mut self.rng);
                self.place_initial(id, fidx, BedType::NonIcu, remaining)?;
            }
        }
        Ok(())
    }

    fn fill_nursing_homes(
        &mut self,
        pool: &mut CommunityPool,
        aged: &[Option<RemainingLosDistribution>],
    ) -> Result<()> {
        let n_agents = self.params.n_agents;
        let reference = self.params.population_reference;
        let homes: Vec<usize> = (0..self.roster.len())
            .filter(|&i| self.roster.at(i).category == Category::Nh)
            .collect();
        for fidx in homes {
            let fid = self.roster.at(fidx).id;
            let beds = self.roster.at(fidx).beds(BedType::NonIcu);
            let occupancy = self
                .tables
                .nursing_homes
                .iter()
                .find(|h| h.facility_id == fid)
                .map_or(0, |h| h.starting_occupancy);
            let n = round_half_up(occupancy as f64 * n_agents as f64 / reference as f64).min(beds);
            let weights = county_weights(&self.distances.nh, fid)?;
            let rd = aged[fidx].clone().expect("aged distribution");
            for _ in 0..n {
                let id = self.draw_agent(
                    pool,
                    fid,
                    |rng| (pick_weighted(&weights, rng.random()), AgeGroup::Over65),
                    |g| g == AgeGroup::Over65,
                )?;
                let remaining = rd.sample(&mut self.rng);
                self.place_initial(id, fidx, BedType::NonIcu, remaining)?;
            }
        }
        Ok(())
    }

    /// Resolves an `auto` multiplier: the expected ICU census of the
    /// hospitals' admission streams must equal the ICU agents placed at day 0.
    fn calibrate_icu(&mut self) -> Result<()> {
        let base = IcuModel::from_params(&self.params, 1.0);
        let m = match self.params.icu_multiplier {
            IcuMultiplier::Fixed(m) => m,
            IcuMultiplier::Auto(_) => {
                let demand = self.icu_demand();
                let target: f64 = self
                    .roster
                    .of_category(Category::Stach)
                    .map(|f| f.occupied(BedType::Icu) as f64)
                    .sum();
                calibrate_multiplier(&base, &demand, &self.params.comorbidity(), target)?
            }
        };
        self.icu = base.with_multiplier(m);
        Ok(())
    }

    /// Expected hospital admission streams at model scale, for hospitals with ICU beds.
    pub fn icu_demand(&self) -> Vec<IcuDemand> {
        let scale = self.params.scale();
        self.tables
            .hospitals
            .iter()
            .filter_map(|r| {
                let i = self.roster.position(r.facility_id)?;
                if self.roster.at(i).beds(BedType::Icu) == 0 {
                    return None;
                }
                let ages = r.age_counts();
                let total: u64 = ages.iter().sum();
                Some(IcuDemand {
                    admissions_per_year: r.in_state_discharges() * scale,
                    beds: r.total_beds(),
                    age_shares: ages.map(|a| a as f64 / total.max(1) as f64),
                    los: self.los[i].clone(),
                })
            })
            .collect()
    }
}
