//! Expected steady-state flows of a scenario.
//!
//! A mean-field version of the daily rules at full population scale with bed
//! limits ignored: community admissions at the community rates applied to the
//! share of each county and age group living in the community, first-choice
//! facility selection, surviving discharges following the transition rows,
//! nursing-home residents returning from hospital, and censuses by Little's
//! law with the discretized LOS means. Used for the ground-truth sidecar of
//! synthetic scenarios and for the generator's own consistency loop.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::engine::choice::ChoiceTables;
use crate::engine::init::{assign_placeholders, compute_starting_capacity};
use crate::error::{Error, Result};
use crate::geography::GeoPoint;
use crate::ids::{AgeGroup, Category, CountyId, FacilityId};
use crate::los::{fit_los, LosDistribution};
use crate::network::{Facility, FacilityRoster};
use crate::transitions::{TransitionInputs, TransitionSource, TransitionTables, DAYS_PER_YEAR};

const MAX_ITERATIONS: usize = 10_000;
const TOLERANCE: f64 = 1e-10;

/// Expected full-scale values for one facility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityTruth {
    pub facility_id: FacilityId,
    pub category: Category,
    /// Mean daily census, placeholders included.
    pub census: f64,
    /// Annual admissions.
    pub admissions: f64,
    pub placeholders: f64,
}

/// Ground truth written next to a generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub population_reference: u64,
    pub facilities: Vec<FacilityTruth>,
    /// Expected annual moves `moves[from][to]` at full scale.
    pub moves: [[f64; 4]; 4],
}

impl Truth {
    pub fn facility(&self, id: FacilityId) -> Option<&FacilityTruth> {
        self.facilities.iter().find(|f| f.facility_id == id)
    }
}

/// Solver output: the truth plus the per-county quantities the generator needs.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub truth: Truth,
    /// Share of each county and age group living in the community.
    pub community_share: BTreeMap<(CountyId, AgeGroup), f64>,
    /// Annual hospital admissions by home county and age, all origins.
    pub hospital_admissions: BTreeMap<(CountyId, AgeGroup), f64>,
    /// Annual hospital admissions that arrive by transfer from a facility.
    pub hospital_transfers: BTreeMap<(CountyId, AgeGroup), f64>,
    /// Annual admissions and mean census per nursing home.
    pub nh_admissions: BTreeMap<FacilityId, f64>,
    pub ltach_census: BTreeMap<FacilityId, f64>,
}

/// Mean of the whole-day LOS actually drawn.
pub fn discrete_mean(d: &LosDistribution) -> f64 {
    d.pmf().iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
}

fn options_of(choice: &ChoiceTables, cat: Category, county: CountyId) -> Vec<(usize, f64)> {
    choice
        .options(cat, county)
        .iter()
        .map(|(f, p)| (f.0 as usize, *p))
        .collect()
}

pub fn solve(scenario: &Scenario) -> Result<FlowSolution> {
    let params = &scenario.parameters;
    let expected = scenario.expected_population();
    let population: BTreeMap<(CountyId, AgeGroup), u64> =
        expected.iter().map(|(k, v)| (*k, v.round() as u64)).collect();
    let tables = TransitionTables::build(
        &TransitionInputs {
            stach: &scenario.stach,
            ltach_beds: scenario.ltach.iter().map(|r| r.beds as u64).sum(),
            nh: &scenario.nh,
            los: &scenario.los,
            county_shares: &scenario.county_shares,
            discharges: &scenario.discharges,
            community_admissions: &scenario.community_admissions,
            population: &population,
        },
        params,
    )?;
    let distances = scenario.distances()?;
    let ltach_ids: Vec<FacilityId> = scenario.ltach.iter().map(|r| r.facility_id).collect();
    let nh_ids: Vec<FacilityId> = scenario.nh.iter().map(|r| r.facility_id).collect();
    let choice = ChoiceTables::build(&tables.hospitals, &ltach_ids, &nh_ids, &distances, params)?;

    let counties: Vec<CountyId> = scenario.counties.iter().map(|c| c.county_id).collect();
    let hospitals: Vec<FacilityId> = tables.hospitals.iter().map(|h| h.facility_id).collect();
    let h_index: BTreeMap<FacilityId, usize> = hospitals.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let l_index: BTreeMap<FacilityId, usize> = ltach_ids.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let n_index: BTreeMap<FacilityId, usize> = nh_ids.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let remap = |opts: Vec<(usize, f64)>, index: &BTreeMap<FacilityId, usize>| -> Vec<(usize, f64)> {
        opts.into_iter()
            .map(|(f, p)| (index[&FacilityId(f as u32)], p))
            .collect()
    };
    let s_opts: Vec<Vec<(usize, f64)>> = counties
        .iter()
        .map(|c| remap(options_of(&choice, Category::Stach, *c), &h_index))
        .collect();
    let l_opts: Vec<Vec<(usize, f64)>> = counties
        .iter()
        .map(|c| remap(options_of(&choice, Category::Ltach, *c), &l_index))
        .collect();
    let n_opts: Vec<Vec<(usize, f64)>> = counties
        .iter()
        .map(|c| remap(options_of(&choice, Category::Nh, *c), &n_index))
        .collect();

    let h_los: Vec<f64> = tables
        .hospitals
        .iter()
        .map(|h| fit_los(h.mean_los, h.sd_los).map(|d| discrete_mean(&d)))
        .collect::<Result<_>>()?;
    let l_los = discrete_mean(&fit_los(params.ltach_los_mean, params.ltach_los_sd)?);
    let n_los: Vec<f64> = scenario
        .nh
        .iter()
        .map(|n| {
            let r = scenario
                .los_row(n.facility_id)
                .ok_or_else(|| Error::input(format!("nursing home {} has no LOS row", n.facility_id)))?;
            fit_los(r.mean_los_days, r.sd_los_days).map(|d| discrete_mean(&d))
        })
        .collect::<Result<_>>()?;

    let d_s = tables.deaths.stach;
    let d_l = tables.deaths.ltach;
    let d_n = tables.deaths.nh;
    let h_rows: Vec<[[f64; 4]; 3]> = hospitals
        .iter()
        .map(|f| AgeGroup::ALL.map(|g| tables.facility.get(TransitionSource::Hospital(*f), g).expect("row").p))
        .collect();
    let l_row = AgeGroup::ALL.map(|g| {
        tables
            .facility
            .get(TransitionSource::LtachCollective, g)
            .expect("row")
            .p
    });
    let n_row = tables
        .facility
        .get(TransitionSource::NhCollective, AgeGroup::Over65)
        .expect("row")
        .p;
    let p_ns = n_row[Category::Stach.index()];
    let p_nc = n_row[Category::Community.index()];
    // share of a nursing home's discharges that come back to it through a hospital
    let r_back = params.nh_stach_nh * (1.0 - d_s) * (1.0 - d_n) * p_ns;

    let nc = counties.len();
    let (s, l, n, c_) = (
        Category::Stach.index(),
        Category::Ltach.index(),
        Category::Nh.index(),
        Category::Community.index(),
    );
    let pop: Vec<[f64; 3]> = counties
        .iter()
        .map(|c| AgeGroup::ALL.map(|g| expected.get(&(*c, g)).copied().unwrap_or(0.0)))
        .collect();
    let rates: Vec<[(f64, f64); 3]> = counties
        .iter()
        .map(|c| {
            AgeGroup::ALL.map(|g| {
                let r = tables.community.get(*c, g);
                (r.p_hospital * DAYS_PER_YEAR, r.p_nh * DAYS_PER_YEAR)
            })
        })
        .collect();

    let mut kappa = vec![[1.0f64; 3]; nc];
    let mut result = None;
    for _outer in 0..MAX_ITERATIONS {
        // community admissions per year
        let comm_s: Vec<[f64; 3]> = (0..nc)
            .map(|c| [0, 1, 2].map(|g| rates[c][g].0 * pop[c][g] * kappa[c][g]))
            .collect();
        let comm_n: Vec<f64> = (0..nc).map(|c| rates[c][2].1 * pop[c][2] * kappa[c][2]).collect();

        // transfer inflows, iterated to a fixed point
        let mut to_s = vec![[0.0f64; 3]; nc];
        let mut nh_to_s = vec![0.0f64; nc];
        let mut to_l = vec![[0.0f64; 3]; nc];
        let mut to_n = vec![0.0f64; nc];
        let mut moves = [[0.0f64; 4]; 4];
        let mut h_in = vec![vec![[0.0f64; 3]; nc]; hospitals.len()];
        for _ in 0..MAX_ITERATIONS {
            let mut next_s = vec![[0.0f64; 3]; nc];
            let mut next_l = vec![[0.0f64; 3]; nc];
            let mut next_n = vec![0.0f64; nc];
            moves = [[0.0; 4]; 4];
            for row in h_in.iter_mut() {
                row.iter_mut().for_each(|v| *v = [0.0; 3]);
            }
            for c in 0..nc {
                let has_l = !l_opts[c].is_empty();
                let has_n = !n_opts[c].is_empty();
                for g in 0..3 {
                    let plain = comm_s[c][g] + to_s[c][g];
                    let from_nh = if g == 2 { nh_to_s[c] } else { 0.0 };
                    for &(h, w) in &s_opts[c] {
                        h_in[h][c][g] += (plain + from_nh) * w;
                        let row = h_rows[h][g];
                        let follow = (plain + from_nh * (1.0 - params.nh_stach_nh)) * w * (1.0 - d_s);
                        moves[s][n] += from_nh * params.nh_stach_nh * w * (1.0 - d_s);
                        next_s[c][g] += follow * row[s];
                        moves[s][s] += follow * row[s];
                        moves[s][c_] += follow * row[c_];
                        if has_l {
                            next_l[c][g] += follow * row[l];
                            moves[s][l] += follow * row[l];
                        } else {
                            moves[s][c_] += follow * row[l];
                        }
                        if has_n {
                            next_n[c] += follow * row[n];
                            moves[s][n] += follow * row[n];
                        } else {
                            moves[s][c_] += follow * row[n];
                        }
                    }
                    if !l_opts[c].is_empty() {
                        let out = to_l[c][g] * (1.0 - d_l);
                        let row = l_row[g];
                        next_s[c][g] += out * row[s];
                        moves[l][s] += out * row[s];
                        moves[l][c_] += out * row[c_];
                        if has_n {
                            next_n[c] += out * row[n];
                            moves[l][n] += out * row[n];
                        } else {
                            moves[l][c_] += out * row[n];
                        }
                    }
                }
                if has_n {
                    next_n[c] += comm_n[c];
                }
            }
            // nursing-home discharges per county, returns folded in
            let mut next_nh_s = vec![0.0f64; nc];
            for c in 0..nc {
                let inflow = next_n[c] / (1.0 - r_back);
                let out = inflow * (1.0 - d_n);
                next_nh_s[c] = out * p_ns;
                moves[n][s] += out * p_ns;
                moves[n][c_] += out * p_nc;
            }
            let mut delta = 0.0f64;
            for c in 0..nc {
                for g in 0..3 {
                    delta = delta.max((next_s[c][g] - to_s[c][g]).abs());
                    delta = delta.max((next_l[c][g] - to_l[c][g]).abs());
                }
                delta = delta.max((next_n[c] - to_n[c]).abs());
                delta = delta.max((next_nh_s[c] - nh_to_s[c]).abs());
            }
            to_s = next_s;
            to_l = next_l;
            to_n = next_n;
            nh_to_s = next_nh_s;
            if delta < TOLERANCE {
                break;
            }
        }
        for c in 0..nc {
            let has_n = !n_opts[c].is_empty();
            for g in 0..3 {
                moves[c_][s] += if s_opts[c].is_empty() { 0.0 } else { comm_s[c][g] };
            }
            if has_n {
                moves[c_][n] += comm_n[c];
            }
        }

        // censuses by county and age
        let mut resident = vec![[0.0f64; 3]; nc];
        let mut h_adm = vec![0.0f64; hospitals.len()];
        let mut h_census = vec![0.0f64; hospitals.len()];
        for (h, per) in h_in.iter().enumerate() {
            for c in 0..nc {
                for g in 0..3 {
                    h_adm[h] += per[c][g];
                    let cen = per[c][g] * h_los[h] / DAYS_PER_YEAR;
                    h_census[h] += cen;
                    resident[c][g] += cen;
                }
            }
        }
        let mut l_adm = vec![0.0f64; ltach_ids.len()];
        for c in 0..nc {
            for g in 0..3 {
                for &(f, w) in &l_opts[c] {
                    l_adm[f] += to_l[c][g] * w;
                }
                resident[c][g] += to_l[c][g] * l_los / DAYS_PER_YEAR;
            }
        }
        let mut n_adm = vec![0.0f64; nh_ids.len()];
        let mut n_census = vec![0.0f64; nh_ids.len()];
        for c in 0..nc {
            let inflow = to_n[c] / (1.0 - r_back);
            for &(f, w) in &n_opts[c] {
                n_adm[f] += inflow * w;
                let cen = inflow * w * n_los[f] / DAYS_PER_YEAR;
                n_census[f] += cen;
                resident[c][2] += cen;
            }
        }
        let mut next_kappa = vec![[1.0f64; 3]; nc];
        let mut change = 0.0f64;
        for c in 0..nc {
            for g in 0..3 {
                let k = if pop[c][g] > 0.0 {
                    1.0 - resident[c][g] / pop[c][g]
                } else {
                    1.0
                };
                if k <= 0.0 {
                    return Err(Error::Scenario(format!(
                        "county {} age group {g}: facility residents exceed the population",
                        counties[c]
                    )));
                }
                next_kappa[c][g] = k;
                change = change.max((k - kappa[c][g]).abs());
            }
        }
        kappa = next_kappa;
        result = Some((moves, h_adm, h_census, l_adm, n_adm, n_census, to_s, nh_to_s, comm_s));
        if change < TOLERANCE {
            break;
        }
    }
    let (moves, h_adm, h_census, l_adm, n_adm, n_census, to_s, nh_to_s, comm_s) =
        result.expect("at least one iteration");

    // out-of-state placeholders at full scale
    let mut roster = FacilityRoster::default();
    for h in &tables.hospitals {
        let rec = scenario
            .stach
            .iter()
            .find(|r| r.facility_id == h.facility_id)
            .expect("record");
        roster.push(Facility::new(
            h.facility_id,
            rec.name.clone(),
            Category::Stach,
            rec.county_id,
            GeoPoint::new(rec.lat, rec.lon)?,
            h.beds_nonicu,
            h.beds_icu,
        )?)?;
    }
    let full = params.population_reference;
    for f in roster.iter_mut() {
        f.scale_to(full, full);
    }
    let starting = compute_starting_capacity(
        &tables.hospitals,
        &roster,
        params,
        scenario.capacity_overrides.as_deref(),
    )?;

    let mut facilities = Vec::new();
    for (i, h) in tables.hospitals.iter().enumerate() {
        let st = starting[&h.facility_id];
        let ph =
            assign_placeholders(st.nonicu, h.out_of_state_share) + assign_placeholders(st.icu, h.out_of_state_share);
        facilities.push(FacilityTruth {
            facility_id: h.facility_id,
            category: Category::Stach,
            census: h_census[i] + ph as f64,
            admissions: h_adm[i],
            placeholders: ph as f64,
        });
    }
    let mut ltach_census = BTreeMap::new();
    for (i, id) in ltach_ids.iter().enumerate() {
        let census = l_adm[i] * l_los / DAYS_PER_YEAR;
        ltach_census.insert(*id, census);
        facilities.push(FacilityTruth {
            facility_id: *id,
            category: Category::Ltach,
            census,
            admissions: l_adm[i],
            placeholders: 0.0,
        });
    }
    let mut nh_admissions = BTreeMap::new();
    for (i, id) in nh_ids.iter().enumerate() {
        nh_admissions.insert(*id, n_adm[i]);
        facilities.push(FacilityTruth {
            facility_id: *id,
            category: Category::Nh,
            census: n_census[i],
            admissions: n_adm[i],
            placeholders: 0.0,
        });
    }

    let mut community_share = BTreeMap::new();
    let mut hospital_admissions = BTreeMap::new();
    let mut hospital_transfers = BTreeMap::new();
    for (c, county) in counties.iter().enumerate() {
        for g in AgeGroup::ALL {
            let gi = g.index();
            let nh_part = if gi == 2 { nh_to_s[c] } else { 0.0 };
            community_share.insert((*county, g), kappa[c][gi]);
            hospital_admissions.insert((*county, g), comm_s[c][gi] + to_s[c][gi] + nh_part);
            hospital_transfers.insert((*county, g), to_s[c][gi] + nh_part);
        }
    }
    Ok(FlowSolution {
        truth: Truth {
            population_reference: full,
            facilities,
            moves,
        },
        community_share,
        hospital_admissions,
        hospital_transfers,
        nh_admissions,
        ltach_census,
    })
}
