//! Tables computed once at initiation from scenario inputs: merged hospital
//! records, community admission probabilities, facility discharge rows,
//! death rates, the four-by-four movement targets and the hospital age mix.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AgeGroup, Category, CountyId, FacilityId};
use crate::network::{NhRecord, StachRecord};
use crate::scenario::params::Parameters;

pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Community,
    Hospital,
    Ltach,
    Nh,
    Death,
}

impl Disposition {
    pub const ALL: [Disposition; 5] = [
        Disposition::Community,
        Disposition::Hospital,
        Disposition::Ltach,
        Disposition::Nh,
        Disposition::Death,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Destination category, `None` for death.
    pub fn category(self) -> Option<Category> {
        match self {
            Disposition::Community => Some(Category::Community),
            Disposition::Hospital => Some(Category::Stach),
            Disposition::Ltach => Some(Category::Ltach),
            Disposition::Nh => Some(Category::Nh),
            Disposition::Death => None,
        }
    }
}

/// `discharges.csv`: hospital discharges by age group and disposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DischargeCount {
    pub facility_id: FacilityId,
    pub age_group: AgeGroup,
    pub disposition: Disposition,
    pub count: u64,
}

/// `county_shares.csv`: in-state discharges by patient county.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountyShareRow {
    pub facility_id: FacilityId,
    pub county_id: CountyId,
    pub discharges: u64,
}

/// `los.csv`: LOS moments and annual discharges for hospitals and nursing homes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosRow {
    pub facility_id: FacilityId,
    pub mean_los_days: f64,
    pub sd_los_days: f64,
    pub total_discharges: u64,
}

/// `community_admissions.csv`: annual admissions from the community.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunityAdmission {
    pub county_id: CountyId,
    pub age_group: AgeGroup,
    pub category: Category,
    pub count: u64,
}

/// Everything known about one hospital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HospitalRecord {
    pub facility_id: FacilityId,
    pub county_id: CountyId,
    pub beds_nonicu: u32,
    pub beds_icu: u32,
    /// All discharges per year, in-state and out-of-state.
    pub total_discharges: u64,
    pub mean_los: f64,
    pub sd_los: f64,
    /// In-state discharges by patient county, ascending county id.
    pub county_discharges: Vec<(CountyId, u64)>,
    pub out_of_state_share: f64,
    /// `dispositions[age][disposition]`.
    pub dispositions: [[u64; 5]; 3],
}

impl HospitalRecord {
    pub fn total_beds(&self) -> u32 {
        self.beds_nonicu + self.beds_icu
    }

    pub fn county_share(&self, county: CountyId) -> f64 {
        let total: u64 = self.county_discharges.iter().map(|(_, n)| n).sum();
        if total == 0 {
            return 0.0;
        }
        self.county_discharges
            .iter()
            .find(|(c, _)| *c == county)
            .map_or(0.0, |(_, n)| *n as f64 / total as f64)
    }

    pub fn age_counts(&self) -> [u64; 3] {
        let mut out = [0; 3];
        for (g, row) in self.dispositions.iter().enumerate() {
            out[g] = row.iter().sum();
        }
        out
    }

    /// Annual in-state discharges.
    pub fn in_state_discharges(&self) -> f64 {
        self.total_discharges as f64 * (1.0 - self.out_of_state_share)
    }

    /// Annual in-state discharges of one age group, split by the age mix of the
    /// disposition counts.
    pub fn in_state_discharges_by_age(&self) -> [f64; 3] {
        let ages = self.age_counts();
        let total: u64 = ages.iter().sum();
        let mut out = [0.0; 3];
        if total > 0 {
            for g in 0..3 {
                out[g] = self.in_state_discharges() * ages[g] as f64 / total as f64;
            }
        }
        out
    }
}

/// Merges roster, LOS, county and disposition inputs per hospital. Hospitals
/// lacking discharge information are dropped and reported in the warnings.
pub fn build_hospital_records(
    stach: &[StachRecord],
    los: &[LosRow],
    shares: &[CountyShareRow],
    discharges: &[DischargeCount],
) -> Result<(Vec<HospitalRecord>, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut los_by: BTreeMap<FacilityId, LosRow> = BTreeMap::new();
    for row in los {
        if los_by.insert(row.facility_id, *row).is_some() {
            return Err(Error::input(format!(
                "duplicate LOS row for facility {}",
                row.facility_id
            )));
        }
    }
    let mut shares_by: BTreeMap<FacilityId, BTreeMap<CountyId, u64>> = BTreeMap::new();
    for row in shares {
        *shares_by
            .entry(row.facility_id)
            .or_default()
            .entry(row.county_id)
            .or_default() += row.discharges;
    }
    let mut disp_by: BTreeMap<FacilityId, [[u64; 5]; 3]> = BTreeMap::new();
    for row in discharges {
        disp_by.entry(row.facility_id).or_insert([[0; 5]; 3])[row.age_group.index()][row.disposition.index()] +=
            row.count;
    }

    let mut records = Vec::new();
    for h in stach {
        let id = h.facility_id;
        let dispositions = disp_by.get(&id).copied().unwrap_or([[0; 5]; 3]);
        let disp_total: u64 = dispositions.iter().flatten().sum();
        let county_discharges: Vec<(CountyId, u64)> = shares_by
            .get(&id)
            .map(|m| m.iter().map(|(c, n)| (*c, *n)).collect())
            .unwrap_or_default();
        let county_total: u64 = county_discharges.iter().map(|(_, n)| n).sum();
        let Some(los_row) = los_by.get(&id) else {
            warnings.push(format!("hospital {id} has no LOS data; excluded"));
            continue;
        };
        if disp_total == 0 {
            warnings.push(format!("hospital {id} has no discharge dispositions; excluded"));
            continue;
        }
        if county_total == 0 {
            warnings.push(format!("hospital {id} has no county-of-residence discharges; excluded"));
            continue;
        }
        if los_row.total_discharges == 0 {
            warnings.push(format!("hospital {id} reports zero total discharges; excluded"));
            continue;
        }
        if !(0.0..=100.0).contains(&h.pct_out_of_state) {
            return Err(Error::input(format!(
                "hospital {id}: pct_out_of_state must be in [0, 100], got {}",
                h.pct_out_of_state
            )));
        }
        records.push(HospitalRecord {
            facility_id: id,
            county_id: h.county_id,
            beds_nonicu: h.beds_nonicu,
            beds_icu: h.beds_icu,
            total_discharges: los_row.total_discharges,
            mean_los: los_row.mean_los_days,
            sd_los: los_row.sd_los_days,
            county_discharges,
            out_of_state_share: h.pct_out_of_state / 100.0,
            dispositions,
        });
    }
    Ok((records, warnings))
}

/// Daily probabilities of leaving the community for one (county, age group).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CommunityRates {
    pub p_hospital: f64,
    pub p_nh: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommunityTransitionTable {
    rates: BTreeMap<(CountyId, AgeGroup), CommunityRates>,
}

impl CommunityTransitionTable {
    pub fn get(&self, county: CountyId, age: AgeGroup) -> CommunityRates {
        self.rates.get(&(county, age)).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(CountyId, AgeGroup), &CommunityRates)> {
        self.rates.iter()
    }
}

/// Population counts per (county, age group).
pub fn population_counts<'a>(
    rows: impl IntoIterator<Item = &'a crate::population::PersonRow>,
) -> BTreeMap<(CountyId, AgeGroup), u64> {
    let mut out = BTreeMap::new();
    for r in rows {
        *out.entry((r.county, r.age_group())).or_insert(0) += 1;
    }
    out
}

/// `daily_p = annual admissions / (population × 365)` per destination. LTACH
/// rows are ignored (no direct community admission) and nursing-home
/// admissions below 65 are zeroed.
pub fn build_community_transitions(
    admissions: &[CommunityAdmission],
    population: &BTreeMap<(CountyId, AgeGroup), u64>,
) -> Result<CommunityTransitionTable> {
    let mut annual: BTreeMap<(CountyId, AgeGroup), [u64; 2]> = BTreeMap::new();
    for a in admissions {
        let slot = match a.category {
            Category::Stach => 0,
            Category::Nh => 1,
            Category::Ltach => continue,
            Category::Community => {
                return Err(Error::input(format!(
                    "community admission row for county {} targets the community",
                    a.county_id
                )))
            }
        };
        annual.entry((a.county_id, a.age_group)).or_insert([0, 0])[slot] += a.count;
    }
    let mut rates = BTreeMap::new();
    let mut errors = Vec::new();
    for ((county, age), [hosp, nh]) in annual {
        let nh = if age == AgeGroup::Over65 { nh } else { 0 };
        if hosp == 0 && nh == 0 {
            continue;
        }
        let pop = population.get(&(county, age)).copied().unwrap_or(0);
        if pop == 0 {
            errors.push(format!(
                "county {county} age group {}: admissions but no population",
                age.index()
            ));
            continue;
        }
        let denom = pop as f64 * DAYS_PER_YEAR;
        let r = CommunityRates {
            p_hospital: hosp as f64 / denom,
            p_nh: nh as f64 / denom,
        };
        if r.p_hospital + r.p_nh > 1.0 {
            errors.push(format!(
                "county {county} age group {}: daily admission probability {} exceeds 1",
                age.index(),
                r.p_hospital + r.p_nh
            ));
            continue;
        }
        rates.insert((county, age), r);
    }
    if errors.is_empty() {
        Ok(CommunityTransitionTable { rates })
    } else {
        Err(Error::Validation(errors))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransitionSource {
    Hospital(FacilityId),
    LtachCollective,
    NhCollective,
}

/// Destination probabilities, indexed by [`Category::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacilityTransitionRow {
    pub source: TransitionSource,
    pub age_group: AgeGroup,
    pub p: [f64; 4],
}

impl FacilityTransitionRow {
    pub fn prob(&self, to: Category) -> f64 {
        self.p[to.index()]
    }

    /// Maps a uniform draw in `[0, 1)` to a destination.
    pub fn pick(&self, u: f64) -> Category {
        let mut acc = 0.0;
        let mut last = Category::Community;
        for c in Category::ALL {
            let p = self.p[c.index()];
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = c;
            if u < acc {
                return c;
            }
        }
        last
    }
}

/// Zeroes destinations an age group may not enter: nursing homes below 65,
/// LTACHs below 50.
pub fn apply_age_prohibitions(age: AgeGroup, p: &mut [f64; 4]) {
    if age != AgeGroup::Over65 {
        p[Category::Nh.index()] = 0.0;
    }
    if age == AgeGroup::Under50 {
        p[Category::Ltach.index()] = 0.0;
    }
}

/// Applies age prohibitions then rescales the remaining weights to sum to 1.
pub fn normalize_row(source: TransitionSource, age: AgeGroup, weights: [f64; 4]) -> Result<FacilityTransitionRow> {
    let mut p = weights;
    if p.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::input(format!(
            "{source:?} age {}: invalid weights {weights:?}",
            age.index()
        )));
    }
    apply_age_prohibitions(age, &mut p);
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::input(format!(
            "{source:?} age {}: every destination is zero after age restrictions",
            age.index()
        )));
    }
    for v in &mut p {
        *v /= total;
    }
    Ok(FacilityTransitionRow {
        source,
        age_group: age,
        p,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacilityTransitions {
    hospitals: BTreeMap<FacilityId, [FacilityTransitionRow; 3]>,
    ltach: [FacilityTransitionRow; 3],
    nh: [FacilityTransitionRow; 3],
}

impl FacilityTransitions {
    pub fn get(&self, source: TransitionSource, age: AgeGroup) -> Option<&FacilityTransitionRow> {
        match source {
            TransitionSource::Hospital(id) => self.hospitals.get(&id).map(|rows| &rows[age.index()]),
            TransitionSource::LtachCollective => Some(&self.ltach[age.index()]),
            TransitionSource::NhCollective => Some(&self.nh[age.index()]),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &FacilityTransitionRow> {
        self.hospitals
            .values()
            .flatten()
            .chain(self.ltach.iter())
            .chain(self.nh.iter())
    }
}

fn ages3<F>(mut f: F) -> Result<[FacilityTransitionRow; 3]>
where
    F: FnMut(AgeGroup) -> Result<FacilityTransitionRow>,
{
    Ok([f(AgeGroup::Under50)?, f(AgeGroup::From50To64)?, f(AgeGroup::Over65)?])
}

/// Hospital rows come from surviving dispositions per age group (falling back
/// to the hospital's pooled counts when an age group has none). The LTACH
/// row is parametric: hospital and nursing-home shares from the parameters,
/// the rest to the community. The nursing-home row sends `nh_community` to
/// the community and the remainder to hospitals.
pub fn build_facility_transitions(records: &[HospitalRecord], params: &Parameters) -> Result<FacilityTransitions> {
    let mut hospitals = BTreeMap::new();
    for r in records {
        let mut pooled = [0.0; 4];
        for row in &r.dispositions {
            for d in Disposition::ALL {
                if let Some(c) = d.category() {
                    pooled[c.index()] += row[d.index()] as f64;
                }
            }
        }
        let source = TransitionSource::Hospital(r.facility_id);
        let rows = ages3(|age| {
            let row = &r.dispositions[age.index()];
            let mut w = [0.0; 4];
            for d in Disposition::ALL {
                if let Some(c) = d.category() {
                    w[c.index()] = row[d.index()] as f64;
                }
            }
            if w.iter().sum::<f64>() == 0.0 {
                w = pooled;
            }
            normalize_row(source, age, w)
        })?;
        hospitals.insert(r.facility_id, rows);
    }
    let ltach_base = [
        1.0 - params.ltach_hospital - params.ltach_nh,
        params.ltach_hospital,
        0.0,
        params.ltach_nh,
    ];
    let ltach = ages3(|age| normalize_row(TransitionSource::LtachCollective, age, ltach_base))?;
    let nh_base = [params.nh_community, 1.0 - params.nh_community, 0.0, 0.0];
    let nh = ages3(|age| normalize_row(TransitionSource::NhCollective, age, nh_base))?;
    Ok(FacilityTransitions { hospitals, ltach, nh })
}

/// Probability of death when a stay ends, per facility category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeathRates {
    pub stach: f64,
    pub ltach: f64,
    pub nh: f64,
}

impl DeathRates {
    pub fn get(&self, category: Category) -> f64 {
        match category {
            Category::Community => 0.0,
            Category::Stach => self.stach,
            Category::Ltach => self.ltach,
            Category::Nh => self.nh,
        }
    }
}

/// Hospital rate is deaths over all discharges. The annual nursing-home death
/// proportion is converted to a per-discharge probability with the mean
/// nursing-home LOS: `annual × mean_los / 365`, capped at 1.
pub fn build_death_rates(
    hospital_deaths: u64,
    hospital_discharges: u64,
    nh_mean_los: f64,
    params: &Parameters,
) -> Result<DeathRates> {
    if hospital_discharges == 0 {
        return Err(Error::input("hospital discharges must be positive"));
    }
    if hospital_deaths > hospital_discharges {
        return Err(Error::input("hospital deaths exceed discharges"));
    }
    if !(nh_mean_los >= 0.0) {
        return Err(Error::input(format!(
            "nursing-home mean LOS must be non-negative, got {nh_mean_los}"
        )));
    }
    Ok(DeathRates {
        stach: hospital_deaths as f64 / hospital_discharges as f64,
        ltach: params.ltach_death,
        nh: (params.nursing_home_death * nh_mean_los / DAYS_PER_YEAR).min(1.0),
    })
}

/// Discharge-weighted mean LOS over LOS rows (plain mean when no weights).
pub fn weighted_mean_los(rows: &[LosRow]) -> f64 {
    let w: u64 = rows.iter().map(|r| r.total_discharges).sum();
    if w > 0 {
        rows.iter()
            .map(|r| r.mean_los_days * r.total_discharges as f64)
            .sum::<f64>()
            / w as f64
    } else if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.mean_los_days).sum::<f64>() / rows.len() as f64
    }
}

/// Share of hospitalized agents per age group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeDistribution(pub [f64; 3]);

impl AgeDistribution {
    pub fn share(&self, age: AgeGroup) -> f64 {
        self.0[age.index()]
    }
}

pub fn build_hospital_age_distribution(counts: [u64; 3]) -> Result<AgeDistribution> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::input("hospital age counts are all zero"));
    }
    Ok(AgeDistribution(counts.map(|c| c as f64 / total as f64)))
}

/// Annual movement targets between categories, `targets[from][to]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FourByFour {
    pub targets: [[f64; 4]; 4],
}

impl FourByFour {
    pub fn get(&self, from: Category, to: Category) -> f64 {
        self.targets[from.index()][to.index()]
    }

    pub fn scaled(&self, factor: f64) -> FourByFour {
        FourByFour {
            targets: self.targets.map(|row| row.map(|v| v * factor)),
        }
    }
}

/// Expected annual discharges of one nursing home.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NhSummary {
    pub facility_id: FacilityId,
    pub starting_occupancy: u32,
    pub mean_los: f64,
}

/// Inputs consumed by [`TransitionTables::build`].
#[derive(Debug, Clone, Copy)]
pub struct TransitionInputs<'a> {
    pub stach: &'a [StachRecord],
    pub ltach_beds: u64,
    pub nh: &'a [NhRecord],
    pub los: &'a [LosRow],
    pub county_shares: &'a [CountyShareRow],
    pub discharges: &'a [DischargeCount],
    pub community_admissions: &'a [CommunityAdmission],
    pub population: &'a BTreeMap<(CountyId, AgeGroup), u64>,
}

/// All initiation-time tables. Immutable once built.
#[derive(Debug, Clone)]
pub struct TransitionTables {
    pub hospitals: Vec<HospitalRecord>,
    pub warnings: Vec<String>,
    pub community: CommunityTransitionTable,
    pub population: BTreeMap<(CountyId, AgeGroup), u64>,
    pub facility: FacilityTransitions,
    pub deaths: DeathRates,
    pub age_distribution: AgeDistribution,
    pub ltach_beds: u64,
    pub nursing_homes: Vec<NhSummary>,
}

impl TransitionTables {
    pub fn build(inputs: &TransitionInputs<'_>, params: &Parameters) -> Result<TransitionTables> {
        let (hospitals, warnings) =
            build_hospital_records(inputs.stach, inputs.los, inputs.county_shares, inputs.discharges)?;
        if hospitals.is_empty() {
            return Err(Error::input("no hospital has discharge data"));
        }
        let community = build_community_transitions(inputs.community_admissions, inputs.population)?;
        let facility = build_facility_transitions(&hospitals, params)?;

        let nh_ids: BTreeSet<FacilityId> = inputs.nh.iter().map(|n| n.facility_id).collect();
        let nh_los: Vec<LosRow> = inputs
            .los
            .iter()
            .filter(|r| nh_ids.contains(&r.facility_id))
            .copied()
            .collect();
        let los_of: BTreeMap<FacilityId, f64> = nh_los.iter().map(|r| (r.facility_id, r.mean_los_days)).collect();
        let mut deaths_total = 0;
        let mut discharges_total = 0;
        let mut ages = [0u64; 3];
        for h in &hospitals {
            for (g, row) in h.dispositions.iter().enumerate() {
                deaths_total += row[Disposition::Death.index()];
                let s: u64 = row.iter().sum();
                discharges_total += s;
                ages[g] += s;
            }
        }
        let deaths = build_death_rates(deaths_total, discharges_total, weighted_mean_los(&nh_los), params)?;
        let age_distribution = build_hospital_age_distribution(ages)?;
        let mut nursing_homes = Vec::new();
        for n in inputs.nh {
            let mean_los = *los_of
                .get(&n.facility_id)
                .ok_or_else(|| Error::input(format!("nursing home {} has no LOS row", n.facility_id)))?;
            nursing_homes.push(NhSummary {
                facility_id: n.facility_id,
                starting_occupancy: n.starting_occupancy,
                mean_los,
            });
        }
        Ok(TransitionTables {
            hospitals,
            warnings,
            community,
            population: inputs.population.clone(),
            facility,
            deaths,
            age_distribution,
            ltach_beds: inputs.ltach_beds,
            nursing_homes,
        })
    }

    pub fn hospital(&self, id: FacilityId) -> Option<&HospitalRecord> {
        self.hospitals.iter().find(|h| h.facility_id == id)
    }
}

/// Annual expected movements implied by the tables, scaled by `n / p`.
///
/// Community rows come from the daily probabilities over the reference
/// population. Hospital rows spread each hospital's in-state discharges over
/// survival and its transition rows. LTACH discharges are estimated from
/// filled beds over the LTACH mean LOS, with the `ltach_65_plus` age mix;
/// nursing-home discharges from starting occupancy over each home's mean LOS.
pub fn build_four_by_four(tables: &TransitionTables, params: &Parameters) -> FourByFour {
    let mut t = [[0.0; 4]; 4];
    let c = Category::Community.index();
    for ((county, age), pop) in &tables.population {
        let r = tables.community.get(*county, *age);
        let person_days = *pop as f64 * DAYS_PER_YEAR;
        t[c][Category::Stach.index()] += r.p_hospital * person_days;
        t[c][Category::Nh.index()] += r.p_nh * person_days;
    }

    let s = Category::Stach.index();
    for h in &tables.hospitals {
        let by_age = h.in_state_discharges_by_age();
        for age in AgeGroup::ALL {
            let survivors = by_age[age.index()] * (1.0 - tables.deaths.stach);
            let row = tables
                .facility
                .get(TransitionSource::Hospital(h.facility_id), age)
                .expect("every record has rows");
            for to in Category::ALL {
                t[s][to.index()] += survivors * row.prob(to);
            }
        }
    }

    let l = Category::Ltach.index();
    let ltach_discharges = tables.ltach_beds as f64 * params.ltach_fill * DAYS_PER_YEAR / params.ltach_los_mean;
    let mix = [
        (AgeGroup::From50To64, 1.0 - params.ltach_65_plus),
        (AgeGroup::Over65, params.ltach_65_plus),
    ];
    for (age, share) in mix {
        let row = tables
            .facility
            .get(TransitionSource::LtachCollective, age)
            .expect("ltach row");
        for to in Category::ALL {
            t[l][to.index()] += ltach_discharges * share * (1.0 - tables.deaths.ltach) * row.prob(to);
        }
    }

    let n = Category::Nh.index();
    let nh_row = tables
        .facility
        .get(TransitionSource::NhCollective, AgeGroup::Over65)
        .expect("nh row");
    for home in &tables.nursing_homes {
        if home.mean_los <= 0.0 {
            continue;
        }
        let d = home.starting_occupancy as f64 * DAYS_PER_YEAR / home.mean_los;
        for to in Category::ALL {
            t[n][to.index()] += d * (1.0 - tables.deaths.nh) * nh_row.prob(to);
        }
    }

    FourByFour { targets: t }.scaled(params.scale())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stach(id: u32, pct_out: f64) -> StachRecord {
        StachRecord {
            facility_id: FacilityId(id),
            name: format!("H{id}"),
            county_id: CountyId(1),
            lat: 35.0,
            lon: -79.0,
            beds_nonicu: 80,
            beds_icu: 20,
            pct_out_of_state: pct_out,
        }
    }

    fn los(id: u32, mean: f64, total: u64) -> LosRow {
        LosRow {
            facility_id: FacilityId(id),
            mean_los_days: mean,
            sd_los_days: 2.0,
            total_discharges: total,
        }
    }

    fn disc(id: u32, g: usize, d: Disposition, count: u64) -> DischargeCount {
        DischargeCount {
            facility_id: FacilityId(id),
            age_group: AgeGroup::from_index(g).unwrap(),
            disposition: d,
            count,
        }
    }

    fn share(id: u32, county: u32, n: u64) -> CountyShareRow {
        CountyShareRow {
            facility_id: FacilityId(id),
            county_id: CountyId(county),
            discharges: n,
        }
    }

    #[test]
    fn hospitals_without_discharge_data_are_dropped() {
        let roster = [stach(1, 5.0), stach(2, 0.0)];
        let (recs, warnings) = build_hospital_records(
            &roster,
            &[los(1, 5.0, 1000), los(2, 4.0, 500)],
            &[share(1, 7, 900)],
            &[disc(1, 0, Disposition::Community, 900)],
        )
        .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].facility_id, FacilityId(1));
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("hospital 2"));
        assert_eq!(recs[0].county_share(CountyId(7)), 1.0);
        assert!((recs[0].out_of_state_share - 0.05).abs() < 1e-12);
    }

    #[test]
    fn county_shares_recount() {
        let counts = [(3u32, 120u64), (5, 30), (9, 50), (3, 0)];
        let rows: Vec<_> = counts.iter().map(|(c, n)| share(1, *c, *n)).collect();
        let (recs, _) = build_hospital_records(
            &[stach(1, 0.0)],
            &[los(1, 5.0, 200)],
            &rows,
            &[disc(1, 2, Disposition::Nh, 10)],
        )
        .unwrap();
        let total: u64 = counts.iter().map(|(_, n)| n).sum();
        for c in [3u32, 5, 9] {
            let expect = counts.iter().filter(|(cc, _)| *cc == c).map(|(_, n)| *n).sum::<u64>() as f64 / total as f64;
            assert!((recs[0].county_share(CountyId(c)) - expect).abs() < 1e-15);
        }
        assert_eq!(recs[0].county_share(CountyId(4)), 0.0);
    }

    fn pop(entries: &[(u32, usize, u64)]) -> BTreeMap<(CountyId, AgeGroup), u64> {
        entries
            .iter()
            .map(|(c, g, n)| ((CountyId(*c), AgeGroup::from_index(*g).unwrap()), *n))
            .collect()
    }

    fn adm(c: u32, g: usize, cat: Category, n: u64) -> CommunityAdmission {
        CommunityAdmission {
            county_id: CountyId(c),
            age_group: AgeGroup::from_index(g).unwrap(),
            category: cat,
            count: n,
        }
    }

    #[test]
    fn community_daily_probabilities() {
        let population = pop(&[(1, 0, 1000), (1, 2, 1000), (2, 0, 50)]);
        let t = build_community_transitions(
            &[
                adm(1, 0, Category::Stach, 365),
                adm(1, 2, Category::Nh, 73),
                adm(1, 0, Category::Nh, 99),
                adm(1, 2, Category::Ltach, 400),
            ],
            &population,
        )
        .unwrap();
        let r = t.get(CountyId(1), AgeGroup::Under50);
        assert!((r.p_hospital - 0.001).abs() < 1e-15);
        assert_eq!(r.p_nh, 0.0);
        let r = t.get(CountyId(1), AgeGroup::Over65);
        assert!((r.p_nh - 0.0002).abs() < 1e-15);
        assert_eq!(r.p_hospital, 0.0);
        assert_eq!(t.get(CountyId(2), AgeGroup::Under50), CommunityRates::default());
    }

    #[test]
    fn community_rejects_impossible_rates() {
        let population = pop(&[(1, 0, 1)]);
        assert!(build_community_transitions(&[adm(1, 0, Category::Stach, 366)], &population).is_err());
        assert!(build_community_transitions(&[adm(3, 0, Category::Stach, 1)], &population).is_err());
        assert!(build_community_transitions(&[adm(1, 0, Category::Stach, 365)], &population).is_ok());
    }

    #[test]
    fn ltach_collective_row() {
        let p = Parameters::default();
        let ft = build_facility_transitions(&[], &p).unwrap();
        let r = ft.get(TransitionSource::LtachCollective, AgeGroup::Over65).unwrap();
        assert!((r.prob(Category::Stach) - 0.071).abs() < 1e-12);
        assert!((r.prob(Category::Nh) - 0.449).abs() < 1e-12);
        assert!((r.prob(Category::Community) - 0.48).abs() < 1e-12);
        assert_eq!(r.prob(Category::Ltach), 0.0);
        let r1 = ft.get(TransitionSource::LtachCollective, AgeGroup::From50To64).unwrap();
        assert_eq!(r1.prob(Category::Nh), 0.0);
        assert!((r1.prob(Category::Stach) - 0.071 / 0.551).abs() < 1e-12);
        let n = ft.get(TransitionSource::NhCollective, AgeGroup::Over65).unwrap();
        assert!((n.prob(Category::Community) - 0.67).abs() < 1e-12);
        assert!((n.prob(Category::Stach) - 0.33).abs() < 1e-12);
    }

    #[test]
    fn hospital_rows_exclude_death_and_fall_back_to_pooled() {
        let (recs, _) = build_hospital_records(
            &[stach(1, 0.0)],
            &[los(1, 5.0, 100)],
            &[share(1, 1, 10)],
            &[
                disc(1, 2, Disposition::Community, 60),
                disc(1, 2, Disposition::Nh, 20),
                disc(1, 2, Disposition::Ltach, 10),
                disc(1, 2, Disposition::Hospital, 10),
                disc(1, 2, Disposition::Death, 100),
            ],
        )
        .unwrap();
        let ft = build_facility_transitions(&recs, &Parameters::default()).unwrap();
        let src = TransitionSource::Hospital(FacilityId(1));
        let r2 = ft.get(src, AgeGroup::Over65).unwrap();
        assert_eq!(r2.p, [0.6, 0.1, 0.1, 0.2]);
        // age 0 has no counts: pooled, with NH and LTACH removed
        let r0 = ft.get(src, AgeGroup::Under50).unwrap();
        assert!((r0.prob(Category::Community) - 60.0 / 70.0).abs() < 1e-12);
        assert_eq!(r0.prob(Category::Nh), 0.0);
        assert_eq!(r0.prob(Category::Ltach), 0.0);
    }

    #[test]
    fn all_prohibited_row_is_an_error() {
        let src = TransitionSource::Hospital(FacilityId(1));
        assert!(normalize_row(src, AgeGroup::Under50, [0.0, 0.0, 3.0, 4.0]).is_err());
        assert!(normalize_row(src, AgeGroup::Over65, [0.0, 0.0, 3.0, 4.0]).is_ok());
    }

    #[test]
    fn row_pick_follows_cumulative_order() {
        let r = normalize_row(TransitionSource::NhCollective, AgeGroup::Over65, [0.5, 0.0, 0.25, 0.25]).unwrap();
        assert_eq!(r.pick(0.0), Category::Community);
        assert_eq!(r.pick(0.49), Category::Community);
        assert_eq!(r.pick(0.5), Category::Ltach);
        assert_eq!(r.pick(0.8), Category::Nh);
        assert_eq!(r.pick(0.999_999_999_999), Category::Nh);
    }

    #[test]
    fn death_rates() {
        let p = Parameters::default();
        let d = build_death_rates(0, 100, 0.0, &p).unwrap();
        assert_eq!(d.stach, 0.0);
        assert_eq!(d.ltach, 0.01);
        let d = build_death_rates(5, 100, 365.0, &p).unwrap();
        assert!((d.stach - 0.05).abs() < 1e-15);
        assert!((d.nh - 0.15).abs() < 1e-15);
        let d = build_death_rates(5, 100, 100_000.0, &p).unwrap();
        assert_eq!(d.nh, 1.0);
        assert!(build_death_rates(0, 0, 1.0, &p).is_err());
    }

    #[test]
    fn hospital_age_distribution() {
        let d = build_hospital_age_distribution([0, 0, 7]).unwrap();
        assert_eq!(d.0, [0.0, 0.0, 1.0]);
        let d = build_hospital_age_distribution([4099, 2012, 3890]).unwrap();
        assert!((d.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d.share(AgeGroup::Under50) - 0.4099).abs() < 1e-4);
        assert!(build_hospital_age_distribution([0, 0, 0]).is_err());
    }

    fn small_tables(params: &Parameters) -> TransitionTables {
        let population = pop(&[(1, 0, 6000), (1, 1, 2000), (1, 2, 2000)]);
        let roster = [stach(1, 10.0)];
        let nh = [NhRecord {
            facility_id: FacilityId(50),
            name: "N".into(),
            county_id: CountyId(1),
            lat: 35.0,
            lon: -79.0,
            beds: 100,
            starting_occupancy: 80,
        }];
        let los_rows = [los(1, 5.0, 1000), los(50, 146.0, 200)];
        let shares = [share(1, 1, 900)];
        let discharges = [
            disc(1, 0, Disposition::Community, 400),
            disc(1, 1, Disposition::Community, 150),
            disc(1, 1, Disposition::Ltach, 50),
            disc(1, 2, Disposition::Community, 250),
            disc(1, 2, Disposition::Nh, 100),
            disc(1, 2, Disposition::Death, 50),
        ];
        let admissions = [
            adm(1, 0, Category::Stach, 300),
            adm(1, 1, Category::Stach, 200),
            adm(1, 2, Category::Stach, 300),
            adm(1, 2, Category::Nh, 100),
        ];
        TransitionTables::build(
            &TransitionInputs {
                stach: &roster,
                ltach_beds: 40,
                nh: &nh,
                los: &los_rows,
                county_shares: &shares,
                discharges: &discharges,
                community_admissions: &admissions,
                population: &population,
            },
            params,
        )
        .unwrap()
    }

    #[test]
    fn four_by_four_structure_and_expectation() {
        let mut p = Parameters::default();
        p.n_agents = 10_000;
        p.population_reference = 10_000;
        let t = small_tables(&p);
        let f = build_four_by_four(&t, &p);
        assert_eq!(f.get(Category::Community, Category::Community), 0.0);
        assert_eq!(f.get(Category::Community, Category::Ltach), 0.0);
        assert_eq!(f.get(Category::Ltach, Category::Ltach), 0.0);
        assert_eq!(f.get(Category::Nh, Category::Nh), 0.0);
        // daily probabilities recover the annual counts
        assert!((f.get(Category::Community, Category::Stach) - 800.0).abs() < 1e-9);
        assert!((f.get(Category::Community, Category::Nh) - 100.0).abs() < 1e-9);
        // hospital: 900 in-state discharges, 40% aged 65+, 50/1000 die, age-2 row is 250:100 community:nh
        let s_to_nh = 900.0 * 0.4 * 0.95 * (100.0 / 350.0);
        assert!((f.get(Category::Stach, Category::Nh) - s_to_nh).abs() < 1e-9);
        // nursing home: 80 × 365 / 146 = 200 discharges
        let nh_death = 0.15 * 146.0 / 365.0;
        assert!((f.get(Category::Nh, Category::Community) - 200.0 * (1.0 - nh_death) * 0.67).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn rows_sum_to_one_and_respect_ages(w in prop::array::uniform4(0.0f64..1000.0), g in 0usize..3) {
            let age = AgeGroup::from_index(g).unwrap();
            let src = TransitionSource::Hospital(FacilityId(1));
            match normalize_row(src, age, w) {
                Ok(r) => {
                    prop_assert!((r.p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    if g < 2 { prop_assert_eq!(r.prob(Category::Nh), 0.0); }
                    if g == 0 { prop_assert_eq!(r.prob(Category::Ltach), 0.0); }
                    prop_assert!(r.p.iter().all(|v| *v >= 0.0));
                }
                Err(_) => {
                    let mut z = w;
                    apply_age_prohibitions(age, &mut z);
                    prop_assert_eq!(z.iter().sum::<f64>(), 0.0);
                }
            }
        }

        #[test]
        fn four_by_four_is_linear_in_n(n in 1u64..5_000) {
            let mut p = Parameters::default();
            p.population_reference = 10_000;
            p.n_agents = n;
            let t = small_tables(&p);
            let a = build_four_by_four(&t, &p);
            p.n_agents = 2 * n;
            let b = build_four_by_four(&t, &p);
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((b.targets[i][j] - 2.0 * a.targets[i][j]).abs() <= 1e-9 * b.targets[i][j].max(1.0));
                }
            }
        }
    }
}
