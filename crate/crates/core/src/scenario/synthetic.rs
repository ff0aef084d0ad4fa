//! Synthetic scenario generator.
//!
//! Builds a world whose input files agree with each other: hospital
//! discharge totals follow from a designed census and LOS, the county shares
//! come from a gravity model fitted so every hospital receives its designed
//! admissions, and the community admission counts are solved so that
//! community admissions plus transfers reproduce those designed admissions.
//! Nursing-home and LTACH sizes are taken from the steady state of the same
//! flows. The expected censuses and moves are written to `truth.json`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::flows::{discrete_mean, solve};
use super::{CountyRecord, Parameters, Scenario};
use crate::error::{Error, Result};
use crate::geography::{great_circle_miles, GeoPoint};
use crate::ids::{AgeGroup, Category, CountyId, FacilityId};
use crate::los::fit_los;
use crate::network::{LtachRecord, NhRecord, StachRecord};
use crate::population::{PersonRow, Sex};
use crate::rng::{seeded, SimRng};
use crate::transitions::{
    apply_age_prohibitions, CommunityAdmission, CountyShareRow, DischargeCount, Disposition, LosRow,
};

const DAYS: f64 = 365.0;
const LTACH_ID_BASE: u32 = 1000;
const NH_ID_BASE: u32 = 2000;
const MAX_ROUNDS: usize = 200;

/// Size and shape knobs of a generated world. Ranges are `[low, high]` and
/// sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub counties: u32,
    pub large_hospitals: u32,
    pub small_hospitals: u32,
    pub ltachs: u32,
    pub nursing_homes: u32,
    /// Full-scale population; also the reference population.
    pub population: u64,
    pub n_agents: u64,
    /// Share of the population written to the population file; the rest is
    /// recovered by expansion.
    pub population_file_share: f64,
    pub lat_range: [f64; 2],
    pub lon_range: [f64; 2],
    /// Relative county sizes are drawn from this range.
    pub county_weight: [f64; 2],
    pub age_shares: [f64; 3],
    /// Age mix of hospital discharges.
    pub hospital_age_mix: [f64; 3],
    pub large_census: [f64; 2],
    pub small_census: [f64; 2],
    pub hospital_los_mean: [f64; 2],
    /// Coefficient of variation of hospital LOS.
    pub hospital_los_cv: [f64; 2],
    pub out_of_state_pct: [f64; 2],
    pub icu_share: f64,
    /// Designed census over total beds.
    pub hospital_occupancy: f64,
    /// Distance decay of hospital choice, miles.
    pub gravity_miles: f64,
    /// Base discharge probabilities per age group in the order community,
    /// hospital, LTACH, nursing home, death.
    pub dispositions: [[f64; 5]; 3],
    /// Each probability is multiplied by a factor drawn from `1 ± jitter`.
    pub disposition_jitter: f64,
    pub nh_los_mean: [f64; 2],
    pub nh_los_cv: [f64; 2],
    pub nh_occupancy: f64,
    pub nh_spare_beds: u32,
    /// Annual direct nursing-home admissions per resident aged 65+.
    pub nh_community_rate: f64,
    /// Facilities are placed within this many degrees of a county centroid.
    pub facility_jitter_degrees: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            counties: 20,
            large_hospitals: 5,
            small_hospitals: 10,
            ltachs: 2,
            nursing_homes: 40,
            population: 100_000,
            n_agents: 100_000,
            population_file_share: 0.97,
            lat_range: [35.0, 36.5],
            lon_range: [-81.0, -77.0],
            county_weight: [0.4, 1.6],
            age_shares: [0.62, 0.19, 0.19],
            hospital_age_mix: [0.4099, 0.2012, 0.3890],
            large_census: [90.0, 220.0],
            small_census: [2.0, 9.0],
            hospital_los_mean: [4.5, 6.5],
            hospital_los_cv: [0.5, 0.9],
            out_of_state_pct: [0.0, 10.0],
            icu_share: 0.12,
            hospital_occupancy: 0.632,
            gravity_miles: 30.0,
            dispositions: [
                [0.958, 0.040, 0.0, 0.0, 0.002],
                [0.937, 0.045, 0.008, 0.0, 0.005],
                [0.860, 0.050, 0.010, 0.040, 0.010],
            ],
            disposition_jitter: 0.2,
            nh_los_mean: [60.0, 200.0],
            nh_los_cv: [0.5, 1.0],
            nh_occupancy: 0.85,
            nh_spare_beds: 2,
            nh_community_rate: 0.005,
            facility_jitter_degrees: 0.1,
        }
    }
}

impl SyntheticSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = toml::from_str(text).map_err(|e| Error::Scenario(format!("synthetic spec: {e}")))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&super::io::read_text(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// `desk`, `minimal` or `large`.
    pub fn preset(name: &str) -> Result<Self> {
        let desk = SyntheticSpec::default();
        match name {
            "desk" => Ok(desk),
            "minimal" => Ok(SyntheticSpec {
                counties: 1,
                large_hospitals: 1,
                small_hospitals: 0,
                ltachs: 1,
                nursing_homes: 1,
                population: 10_000,
                n_agents: 10_000,
                large_census: [15.0, 25.0],
                ..desk
            }),
            "large" => Ok(SyntheticSpec {
                population: 1_000_000,
                n_agents: 1_000_000,
                large_census: [900.0, 2200.0],
                small_census: [20.0, 90.0],
                ..desk
            }),
            other => Err(Error::Scenario(format!(
                "unknown preset {other:?}; expected desk, minimal or large"
            ))),
        }
    }

    fn check(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.counties == 0 {
            errors.push("counties must be at least 1".to_string());
        }
        if self.large_hospitals + self.small_hospitals == 0 {
            errors.push("at least one hospital is required".into());
        }
        if self.population == 0 || self.n_agents == 0 || self.n_agents > self.population {
            errors.push("need 0 < n_agents <= population".into());
        }
        if !(self.population_file_share > 0.0 && self.population_file_share <= 1.0) {
            errors.push("population_file_share must be in (0, 1]".into());
        }
        for (name, v) in [
            ("age_shares", self.age_shares),
            ("hospital_age_mix", self.hospital_age_mix),
        ] {
            if v.iter().any(|x| !(*x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > 1e-3 {
                errors.push(format!("{name} must be non-negative and sum to 1 within 0.001"));
            }
        }
        for (name, r) in [
            ("lat_range", self.lat_range),
            ("lon_range", self.lon_range),
            ("county_weight", self.county_weight),
            ("large_census", self.large_census),
            ("small_census", self.small_census),
            ("hospital_los_mean", self.hospital_los_mean),
            ("hospital_los_cv", self.hospital_los_cv),
            ("out_of_state_pct", self.out_of_state_pct),
            ("nh_los_mean", self.nh_los_mean),
            ("nh_los_cv", self.nh_los_cv),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                errors.push(format!("{name} must be an ordered pair"));
            }
        }
        if self.hospital_los_mean[0] < 1.0 || self.nh_los_mean[0] < 1.0 {
            errors.push("LOS means must be at least one day".into());
        }
        if self.county_weight[0] <= 0.0 {
            errors.push("county weights must be positive".into());
        }
        if self.large_census[0] <= 0.0 || self.small_census[0] <= 0.0 {
            errors.push("hospital census must be positive".into());
        }
        if !(0.0..=100.0).contains(&self.out_of_state_pct[0]) || self.out_of_state_pct[1] >= 100.0 {
            errors.push("out_of_state_pct must lie in [0, 100)".into());
        }
        for (name, v) in [
            ("icu_share", self.icu_share),
            ("hospital_occupancy", self.hospital_occupancy),
            ("nh_occupancy", self.nh_occupancy),
        ] {
            if !(v > 0.0 && v < 1.0) {
                errors.push(format!("{name} must lie in (0, 1)"));
            }
        }
        if !(self.gravity_miles > 0.0) {
            errors.push("gravity_miles must be positive".into());
        }
        if !(0.0..1.0).contains(&self.disposition_jitter) {
            errors.push("disposition_jitter must lie in [0, 1)".into());
        }
        for (g, row) in self.dispositions.iter().enumerate() {
            if row.iter().any(|p| !(*p >= 0.0)) || row.iter().take(4).sum::<f64>() <= 0.0 {
                errors.push(format!(
                    "dispositions of age group {g} must be non-negative with a live destination"
                ));
            }
        }
        if !(self.nh_community_rate >= 0.0) {
            errors.push("nh_community_rate must be non-negative".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }
}

fn uniform(rng: &mut SimRng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn round_to(x: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (x * f).round() / f
}

fn pick_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Largest-remainder split of `total` in proportion to `weights`.
fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut left = total - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

struct DesignedHospital {
    record: StachRecord,
    los: LosRow,
    /// In-state admissions per year.
    admissions: f64,
}

fn place_near(rng: &mut SimRng, counties: &[CountyRecord], weights: &[f64], jitter: f64) -> (CountyId, f64, f64) {
    let c = &counties[pick_index(weights, rng.random())];
    let lat = round_to(c.lat + uniform(rng, [-jitter, jitter]), 4);
    let lon = round_to(c.lon + uniform(rng, [-jitter, jitter]), 4);
    (c.county_id, lat, lon)
}

/// Generates a complete scenario, truth included. Identical for a given
/// spec and seed.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<Scenario> {
    spec.check()?;
    let mut rng = seeded(seed);
    let mix_total: f64 = spec.hospital_age_mix.iter().sum();
    let age_mix = spec.hospital_age_mix.map(|a| a / mix_total);
    let mut params = Parameters {
        n_agents: spec.n_agents,
        population_reference: spec.population,
        seed,
        ..Parameters::default()
    };
    params.validate()?;

    // counties and population
    let mut counties = Vec::new();
    let mut weights = Vec::new();
    for i in 1..=spec.counties {
        counties.push(CountyRecord {
            county_id: CountyId(i),
            name: format!("County {i}"),
            lat: round_to(uniform(&mut rng, spec.lat_range), 4),
            lon: round_to(uniform(&mut rng, spec.lon_range), 4),
        });
        weights.push(uniform(&mut rng, spec.county_weight));
    }
    let file_rows = ((spec.population as f64 * spec.population_file_share).round() as u64).max(spec.counties as u64);
    let per_county = apportion(file_rows, &weights);
    let mut population = Vec::with_capacity(file_rows as usize);
    for (c, n) in counties.iter().zip(&per_county) {
        for _ in 0..*n {
            let g = pick_index(&spec.age_shares, rng.random());
            let age_years = match g {
                0 => rng.random_range(0..50),
                1 => rng.random_range(50..65),
                _ => rng.random_range(65..95),
            };
            let sex = if rng.random::<bool>() { Sex::Female } else { Sex::Male };
            population.push(PersonRow {
                county: c.county_id,
                sex,
                age_years,
            });
        }
    }
    let factor = spec.population as f64 / file_rows as f64;
    let mut pop = BTreeMap::new();
    for r in &population {
        *pop.entry((r.county, r.age_group())).or_insert(0.0) += factor;
    }
    let pop_of = |c: CountyId, g: AgeGroup| pop.get(&(c, g)).copied().unwrap_or(0.0);
    let mut pop_by_age = [0.0; 3];
    for ((_, g), v) in &pop {
        pop_by_age[g.index()] += v;
    }

    // hospitals
    let mut hospitals = Vec::new();
    let n_hosp = spec.large_hospitals + spec.small_hospitals;
    for i in 1..=n_hosp {
        let census = if i <= spec.large_hospitals {
            uniform(&mut rng, spec.large_census)
        } else {
            uniform(&mut rng, spec.small_census)
        };
        let (county_id, lat, lon) = place_near(&mut rng, &counties, &weights, spec.facility_jitter_degrees);
        let mean = round_to(uniform(&mut rng, spec.hospital_los_mean), 2);
        let sd = round_to(mean * uniform(&mut rng, spec.hospital_los_cv), 2);
        let pct = round_to(uniform(&mut rng, spec.out_of_state_pct), 2);
        let total_beds = (census / spec.hospital_occupancy).ceil().max(2.0) as u32;
        let icu = ((total_beds as f64 * spec.icu_share).round() as u32).max(1);
        let m = discrete_mean(&fit_los(mean, sd)?);
        let total_discharges = (census * DAYS / m).round().max(1.0) as u64;
        hospitals.push(DesignedHospital {
            record: StachRecord {
                facility_id: FacilityId(i),
                name: format!("Hospital {i}"),
                county_id,
                lat,
                lon,
                beds_nonicu: total_beds - icu,
                beds_icu: icu,
                pct_out_of_state: pct,
            },
            los: LosRow {
                facility_id: FacilityId(i),
                mean_los_days: mean,
                sd_los_days: sd,
                total_discharges,
            },
            admissions: total_discharges as f64 * (1.0 - pct / 100.0),
        });
    }

    // designed hospital admissions by county and age
    let total_admissions: f64 = hospitals.iter().map(|h| h.admissions).sum();
    let mut designed: BTreeMap<(CountyId, AgeGroup), f64> = BTreeMap::new();
    for c in &counties {
        for g in AgeGroup::ALL {
            let share = if pop_by_age[g.index()] > 0.0 {
                pop_of(c.county_id, g) / pop_by_age[g.index()]
            } else {
                0.0
            };
            designed.insert((c.county_id, g), age_mix[g.index()] * total_admissions * share);
        }
    }
    let by_county: Vec<f64> = counties
        .iter()
        .map(|c| AgeGroup::ALL.iter().map(|g| designed[&(c.county_id, *g)]).sum())
        .collect();

    // gravity choice fitted to the designed admissions
    let decay: Vec<Vec<f64>> = hospitals
        .iter()
        .map(|h| {
            let hp = GeoPoint::new(h.record.lat, h.record.lon)?;
            counties
                .iter()
                .map(|c| Ok((-great_circle_miles(GeoPoint::new(c.lat, c.lon)?, hp) / spec.gravity_miles).exp()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut beta = vec![1.0; hospitals.len()];
    let share = |beta: &[f64], h: usize, c: usize| -> f64 {
        let den: f64 = (0..beta.len()).map(|k| beta[k] * decay[k][c]).sum();
        if den > 0.0 {
            beta[h] * decay[h][c] / den
        } else {
            0.0
        }
    };
    for _ in 0..5_000 {
        let mut worst = 0.0f64;
        let mut next = beta.clone();
        for (h, hosp) in hospitals.iter().enumerate() {
            let got: f64 = (0..counties.len()).map(|c| by_county[c] * share(&beta, h, c)).sum();
            if got > 0.0 {
                next[h] = beta[h] * hosp.admissions / got;
                worst = worst.max((got / hosp.admissions - 1.0).abs());
            }
        }
        let norm = next[0];
        beta = next.into_iter().map(|b| b / norm).collect();
        if worst < 1e-10 {
            break;
        }
    }
    let mut county_shares = Vec::new();
    for (h, hosp) in hospitals.iter().enumerate() {
        for (c, county) in counties.iter().enumerate() {
            let n = (by_county[c] * share(&beta, h, c)).round() as u64;
            if n > 0 {
                county_shares.push(CountyShareRow {
                    facility_id: hosp.record.facility_id,
                    county_id: county.county_id,
                    discharges: n,
                });
            }
        }
    }

    // dispositions
    let mut discharges = Vec::new();
    for hosp in &hospitals {
        for g in AgeGroup::ALL {
            let base = spec.dispositions[g.index()];
            let mut p = [0.0; 5];
            for (i, b) in base.iter().enumerate() {
                p[i] = b * uniform(&mut rng, [1.0 - spec.disposition_jitter, 1.0 + spec.disposition_jitter]);
            }
            let mut live = [p[0], p[1], p[2], p[3]];
            apply_age_prohibitions(g, &mut live);
            p[..4].copy_from_slice(&live);
            let total: f64 = p.iter().sum();
            let n_age = hosp.los.total_discharges as f64 * age_mix[g.index()];
            for d in Disposition::ALL {
                let count = (n_age * p[d.index()] / total).round() as u64;
                if count > 0 {
                    discharges.push(DischargeCount {
                        facility_id: hosp.record.facility_id,
                        age_group: g,
                        disposition: d,
                        count,
                    });
                }
            }
        }
    }

    // LTACHs and nursing homes; sizes come from the flows below
    let mut ltach = Vec::new();
    for i in 1..=spec.ltachs {
        let (county_id, lat, lon) = place_near(&mut rng, &counties, &weights, spec.facility_jitter_degrees);
        ltach.push(LtachRecord {
            facility_id: FacilityId(LTACH_ID_BASE + i),
            name: format!("LTACH {i}"),
            county_id,
            lat,
            lon,
            beds: 1,
        });
    }
    let mut nh = Vec::new();
    let mut los: Vec<LosRow> = hospitals.iter().map(|h| h.los).collect();
    for i in 1..=spec.nursing_homes {
        let (county_id, lat, lon) = place_near(&mut rng, &counties, &weights, spec.facility_jitter_degrees);
        let id = FacilityId(NH_ID_BASE + i);
        nh.push(NhRecord {
            facility_id: id,
            name: format!("Nursing Home {i}"),
            county_id,
            lat,
            lon,
            beds: 1,
            starting_occupancy: 0,
        });
        let mean = round_to(uniform(&mut rng, spec.nh_los_mean), 1);
        los.push(LosRow {
            facility_id: id,
            mean_los_days: mean,
            sd_los_days: round_to(mean * uniform(&mut rng, spec.nh_los_cv), 1),
            total_discharges: 1,
        });
    }

    // community admissions start at the designed hospital admissions
    let mut stach_counts: BTreeMap<(CountyId, AgeGroup), u64> =
        designed.iter().map(|(k, v)| (*k, v.round() as u64)).collect();
    let nh_counts: BTreeMap<CountyId, u64> = counties
        .iter()
        .map(|c| {
            (
                c.county_id,
                (spec.nh_community_rate * pop_of(c.county_id, AgeGroup::Over65)).round() as u64,
            )
        })
        .collect();

    let mut scenario = Scenario {
        parameters: params.clone(),
        defaulted: Vec::new(),
        counties,
        population,
        stach: hospitals.iter().map(|h| h.record.clone()).collect(),
        ltach,
        nh,
        discharges,
        county_shares,
        los,
        community_admissions: Vec::new(),
        capacity_overrides: None,
        distances: None,
        truth: None,
    };

    for round in 0..MAX_ROUNDS {
        scenario.community_admissions = community_rows(&stach_counts, &nh_counts);
        let sol = solve(&scenario)?;
        let mut changed = false;

        let mut next = BTreeMap::new();
        for (key, target) in &designed {
            let transfers = sol.hospital_transfers[key];
            let kappa = sol.community_share[key];
            let need = (target - transfers) / kappa;
            if need < -0.5 {
                return Err(Error::Scenario(format!(
                    "infeasible spec: county {} age group {} receives more hospital transfers ({transfers:.0}) than its designed admissions ({target:.0})",
                    key.0,
                    key.1.index()
                )));
            }
            let count = need.max(0.0).round() as u64;
            if pop_of(key.0, key.1) > 0.0 && count as f64 > pop_of(key.0, key.1) * DAYS {
                return Err(Error::Scenario(format!(
                    "infeasible spec: county {} age group {} needs more admissions than person-days",
                    key.0,
                    key.1.index()
                )));
            }
            changed |= stach_counts.get(key) != Some(&count);
            next.insert(*key, count);
        }
        stach_counts = next;

        for home in &mut scenario.nh {
            let census = sol.truth.facility(home.facility_id).map_or(0.0, |t| t.census);
            let occupancy = census.round() as u32;
            let beds = (census / spec.nh_occupancy).ceil() as u32 + spec.nh_spare_beds;
            changed |= home.starting_occupancy != occupancy || home.beds != beds;
            home.starting_occupancy = occupancy;
            home.beds = beds.max(1);
        }
        for row in &mut scenario.los {
            if let Some(adm) = sol.nh_admissions.get(&row.facility_id) {
                let total = adm.round().max(1.0) as u64;
                changed |= row.total_discharges != total;
                row.total_discharges = total;
            }
        }
        for l in &mut scenario.ltach {
            let census = sol.ltach_census.get(&l.facility_id).copied().unwrap_or(0.0);
            let beds = ((census / params.ltach_fill).round() as u32).max(1);
            changed |= l.beds != beds;
            l.beds = beds;
        }
        if !changed && round > 0 {
            break;
        }
    }
    scenario.community_admissions = community_rows(&stach_counts, &nh_counts);
    let final_solution = solve(&scenario)?;
    params.days = 365;
    scenario.parameters = params;
    scenario.truth = Some(final_solution.truth);
    scenario.validate()?;
    Ok(scenario)
}

fn community_rows(
    stach: &BTreeMap<(CountyId, AgeGroup), u64>,
    nh: &BTreeMap<CountyId, u64>,
) -> Vec<CommunityAdmission> {
    let mut rows = Vec::new();
    for ((county, age), count) in stach {
        rows.push(CommunityAdmission {
            county_id: *county,
            age_group: *age,
            category: Category::Stach,
            count: *count,
        });
        if *age == AgeGroup::Over65 {
            rows.push(CommunityAdmission {
                county_id: *county,
                age_group: *age,
                category: Category::Nh,
                count: nh.get(county).copied().unwrap_or(0),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_is_exact() {
        let v = apportion(10, &[1.0, 1.0, 1.0]);
        assert_eq!(v.iter().sum::<u64>(), 10);
        assert_eq!(v, vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.5, 0.25, 0.25]), vec![3, 2, 2]);
    }

    #[test]
    fn unknown_spec_keys_are_rejected() {
        assert!(SyntheticSpec::from_toml("counties = 3\nbogus = 1\n").is_err());
        let s = SyntheticSpec::from_toml("counties = 3\n").unwrap();
        assert_eq!(s.counties, 3);
        assert_eq!(s.nursing_homes, 40);
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        let s = SyntheticSpec::preset("minimal").unwrap();
        assert_eq!(SyntheticSpec::from_toml(&s.to_toml()).unwrap(), s);
        assert!(SyntheticSpec::preset("huge").is_err());
    }

    #[test]
    fn minimal_world_is_consistent() {
        let spec = SyntheticSpec::preset("minimal").unwrap();
        let sc = generate(&spec, 3).unwrap();
        assert_eq!(sc.counties.len(), 1);
        assert_eq!(sc.stach.len(), 1);
        let truth = sc.truth.as_ref().unwrap();
        // the fitted community counts reproduce the designed hospital admissions
        let sol = solve(&sc).unwrap();
        let designed: f64 = sc.los[0].total_discharges as f64 * (1.0 - sc.stach[0].pct_out_of_state / 100.0);
        let got = truth.facility(FacilityId(1)).unwrap().admissions;
        assert!((got / designed - 1.0).abs() < 0.01, "{got} vs {designed}");
        assert_eq!(sol.truth, *truth);
    }

    #[test]
    fn infeasible_spec_is_an_error() {
        let spec = SyntheticSpec {
            population: 1_000,
            n_agents: 1_000,
            counties: 1,
            large_hospitals: 1,
            small_hospitals: 0,
            nursing_homes: 1,
            ltachs: 1,
            large_census: [2_000.0, 2_000.0],
            ..SyntheticSpec::default()
        };
        assert!(generate(&spec, 1).is_err());
    }
}
