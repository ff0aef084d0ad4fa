//! Scenario directories: the input file set, cross-reference checks and the
//! synthetic generator that produces test worlds with known expectations.
//!
//! A scenario directory contains:
//!
//! | file | header |
//! |---|---|
//! | `parameters.txt` | `key=value` lines |
//! | `counties.csv` | `county_id,name,lat,lon` |
//! | `population.csv` | `county_id,sex,age_years` |
//! | `stach.csv` | `facility_id,name,county_id,lat,lon,beds_nonicu,beds_icu,pct_out_of_state` |
//! | `ltach.csv` | `facility_id,name,county_id,lat,lon,beds` |
//! | `nh.csv` | `facility_id,name,county_id,lat,lon,beds,starting_occupancy` |
//! | `discharges.csv` | `facility_id,age_group,disposition,count` |
//! | `county_shares.csv` | `facility_id,county_id,discharges` |
//! | `los.csv` | `facility_id,mean_los_days,sd_los_days,total_discharges` |
//! | `community_admissions.csv` | `county_id,age_group,category,count` |
//! | `stach_capacity.csv` (optional) | `facility_id,nonicu_fill,icu_fill` |
//! | `distances_{stach,ltach,nh}.csv` (optional) | `county_id,facility_id,miles` |
//! | `truth.json` (optional) | expected census and flows |

pub mod flows;
pub mod io;
pub mod params;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geography::{DistanceMatrix, GeoPoint};
use crate::ids::{AgeGroup, Category, CountyId, FacilityId};
use crate::network::{LtachRecord, NhRecord, StachRecord};
use crate::population::PersonRow;
use crate::transitions::{CommunityAdmission, CountyShareRow, DischargeCount, LosRow};

pub use flows::Truth;
pub use params::{IcuMultiplier, Parameters};

pub const PARAMETERS_FILE: &str = "parameters.txt";
pub const COUNTIES_FILE: &str = "counties.csv";
pub const POPULATION_FILE: &str = "population.csv";
pub const STACH_FILE: &str = "stach.csv";
pub const LTACH_FILE: &str = "ltach.csv";
pub const NH_FILE: &str = "nh.csv";
pub const DISCHARGES_FILE: &str = "discharges.csv";
pub const COUNTY_SHARES_FILE: &str = "county_shares.csv";
pub const LOS_FILE: &str = "los.csv";
pub const COMMUNITY_ADMISSIONS_FILE: &str = "community_admissions.csv";
pub const CAPACITY_FILE: &str = "stach_capacity.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// Environment variable naming the default scenario directory.
pub const SCENARIO_ENV: &str = "PATIENTFLOW_SCENARIO";

pub fn distance_file(category: Category) -> String {
    format!("distances_{}.csv", category.label())
}

/// County centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyRecord {
    pub county_id: CountyId,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

/// Facility-specific starting fills for hospitals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityOverride {
    pub facility_id: FacilityId,
    pub nonicu_fill: f64,
    pub icu_fill: f64,
}

/// One distance matrix per facility category.
#[derive(Debug, Clone)]
pub struct Distances {
    pub stach: DistanceMatrix,
    pub ltach: DistanceMatrix,
    pub nh: DistanceMatrix,
}

impl Distances {
    pub fn build(
        counties: &[CountyRecord],
        stach: &[StachRecord],
        ltach: &[LtachRecord],
        nh: &[NhRecord],
    ) -> Result<Self> {
        let cs = counties
            .iter()
            .map(|c| Ok((c.county_id, GeoPoint::new(c.lat, c.lon)?)))
            .collect::<Result<Vec<_>>>()?;
        let pts = |rows: Vec<(FacilityId, f64, f64)>| -> Result<Vec<(FacilityId, GeoPoint)>> {
            rows.into_iter()
                .map(|(id, lat, lon)| Ok((id, GeoPoint::new(lat, lon)?)))
                .collect()
        };
        Ok(Distances {
            stach: DistanceMatrix::build(
                Category::Stach,
                &cs,
                &pts(stach.iter().map(|r| (r.facility_id, r.lat, r.lon)).collect())?,
            )?,
            ltach: DistanceMatrix::build(
                Category::Ltach,
                &cs,
                &pts(ltach.iter().map(|r| (r.facility_id, r.lat, r.lon)).collect())?,
            )?,
            nh: DistanceMatrix::build(
                Category::Nh,
                &cs,
                &pts(nh.iter().map(|r| (r.facility_id, r.lat, r.lon)).collect())?,
            )?,
        })
    }

    pub fn get(&self, category: Category) -> Option<&DistanceMatrix> {
        match category {
            Category::Stach => Some(&self.stach),
            Category::Ltach => Some(&self.ltach),
            Category::Nh => Some(&self.nh),
            Category::Community => None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for m in [&self.stach, &self.ltach, &self.nh] {
            let path = dir.join(distance_file(m.category()));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            m.write_csv(std::io::BufWriter::new(file))?;
        }
        Ok(())
    }
}

/// A complete, cross-checked set of inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub parameters: Parameters,
    /// Parameter keys that fell back to their defaults.
    pub defaulted: Vec<&'static str>,
    pub counties: Vec<CountyRecord>,
    pub population: Vec<PersonRow>,
    pub stach: Vec<StachRecord>,
    pub ltach: Vec<LtachRecord>,
    pub nh: Vec<NhRecord>,
    pub discharges: Vec<DischargeCount>,
    pub county_shares: Vec<CountyShareRow>,
    pub los: Vec<LosRow>,
    pub community_admissions: Vec<CommunityAdmission>,
    pub capacity_overrides: Option<Vec<CapacityOverride>>,
    /// Precomputed distances, when supplied.
    pub distances: Option<Distances>,
    pub truth: Option<Truth>,
}

fn collect<T>(errors: &mut Vec<String>, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(Error::Validation(list)) => {
            errors.extend(list);
            None
        }
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    }
}

impl Scenario {
    /// Reads and cross-checks a scenario directory. Every file is attempted
    /// and all problems are reported together.
    pub fn load(dir: &Path) -> Result<Scenario> {
        if !dir.is_dir() {
            return Err(Error::Scenario(format!("{} is not a directory", dir.display())));
        }
        let p = |name: &str| dir.join(name);
        let mut errors = Vec::new();
        let params = collect(
            &mut errors,
            io::read_text(&p(PARAMETERS_FILE)).and_then(|t| {
                Parameters::parse(&t).map_err(|e| match e {
                    Error::Validation(list) => Error::Validation(
                        list.into_iter()
                            .map(|m| format!("{}: {m}", p(PARAMETERS_FILE).display()))
                            .collect(),
                    ),
                    other => other,
                })
            }),
        );
        let counties = collect(&mut errors, io::read_rows(&p(COUNTIES_FILE), io::COUNTY_HEADER));
        let population = collect(&mut errors, io::read_rows(&p(POPULATION_FILE), io::POPULATION_HEADER));
        let stach = collect(&mut errors, io::read_rows(&p(STACH_FILE), io::STACH_HEADER));
        let ltach = collect(&mut errors, io::read_rows(&p(LTACH_FILE), io::LTACH_HEADER));
        let nh = collect(&mut errors, io::read_rows(&p(NH_FILE), io::NH_HEADER));
        let discharges = collect(&mut errors, io::read_rows(&p(DISCHARGES_FILE), io::DISCHARGE_HEADER));
        let shares = collect(
            &mut errors,
            io::read_rows(&p(COUNTY_SHARES_FILE), io::COUNTY_SHARES_HEADER),
        );
        let los = collect(&mut errors, io::read_rows(&p(LOS_FILE), io::LOS_HEADER));
        let admissions = collect(
            &mut errors,
            io::read_rows(&p(COMMUNITY_ADMISSIONS_FILE), io::COMMUNITY_ADMISSIONS_HEADER),
        );
        let overrides = if p(CAPACITY_FILE).exists() {
            collect(&mut errors, io::read_rows(&p(CAPACITY_FILE), io::CAPACITY_HEADER)).map(Some)
        } else {
            Some(None)
        };
        let truth = if p(TRUTH_FILE).exists() {
            collect(&mut errors, read_truth(&p(TRUTH_FILE))).map(Some)
        } else {
            Some(None)
        };
        let mut matrices = Vec::new();
        for c in Category::FACILITIES {
            let path = p(&distance_file(c));
            if path.exists() {
                let m = File::open(&path)
                    .map_err(|e| Error::io(&path, e))
                    .and_then(|f| DistanceMatrix::read_csv(c, BufReader::new(f)))
                    .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())));
                matrices.push(collect(&mut errors, m));
            } else {
                matrices.push(None);
            }
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let (parameters, defaulted) = params.expect("checked");
        let distances = match (matrices.remove(0), matrices.remove(0), matrices.remove(0)) {
            (Some(stach), Some(ltach), Some(nh)) => Some(Distances { stach, ltach, nh }),
            (None, None, None) => None,
            _ => {
                return Err(Error::Scenario(
                    "distance files must be supplied for all three categories or none".into(),
                ))
            }
        };
        for key in &defaulted {
            log::info!("parameter {key} not set; using default");
        }
        let scenario = Scenario {
            parameters,
            defaulted,
            counties: counties.expect("checked"),
            population: population.expect("checked"),
            stach: stach.expect("checked"),
            ltach: ltach.expect("checked"),
            nh: nh.expect("checked"),
            discharges: discharges.expect("checked"),
            county_shares: shares.expect("checked"),
            los: los.expect("checked"),
            community_admissions: admissions.expect("checked"),
            capacity_overrides: overrides.expect("checked"),
            distances,
            truth: truth.expect("checked"),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Writes every file of the scenario into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = |name: &str| dir.join(name);
        io::write_text(&p(PARAMETERS_FILE), &self.parameters.to_text())?;
        io::write_rows(&p(COUNTIES_FILE), io::COUNTY_HEADER, &self.counties)?;
        io::write_rows(&p(POPULATION_FILE), io::POPULATION_HEADER, &self.population)?;
        io::write_rows(&p(STACH_FILE), io::STACH_HEADER, &self.stach)?;
        io::write_rows(&p(LTACH_FILE), io::LTACH_HEADER, &self.ltach)?;
        io::write_rows(&p(NH_FILE), io::NH_HEADER, &self.nh)?;
        io::write_rows(&p(DISCHARGES_FILE), io::DISCHARGE_HEADER, &self.discharges)?;
        io::write_rows(&p(COUNTY_SHARES_FILE), io::COUNTY_SHARES_HEADER, &self.county_shares)?;
        io::write_rows(&p(LOS_FILE), io::LOS_HEADER, &self.los)?;
        io::write_rows(
            &p(COMMUNITY_ADMISSIONS_FILE),
            io::COMMUNITY_ADMISSIONS_HEADER,
            &self.community_admissions,
        )?;
        if let Some(rows) = &self.capacity_overrides {
            io::write_rows(&p(CAPACITY_FILE), io::CAPACITY_HEADER, rows)?;
        }
        if let Some(d) = &self.distances {
            d.write(dir)?;
        }
        if let Some(t) = &self.truth {
            io::write_text(&p(TRUTH_FILE), &serde_json::to_string_pretty(t)?)?;
        }
        Ok(())
    }

    /// Cross-reference and range checks; all failures are reported together.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let mut county_ids = BTreeSet::new();
        for c in &self.counties {
            if !county_ids.insert(c.county_id) {
                errors.push(format!("{COUNTIES_FILE}: duplicate county_id {}", c.county_id));
            }
            if let Err(e) = GeoPoint::new(c.lat, c.lon) {
                errors.push(format!("{COUNTIES_FILE}: county {}: {e}", c.county_id));
            }
        }
        let mut category_of: BTreeMap<FacilityId, Category> = BTreeMap::new();
        let mut roster = |file: &str, id: FacilityId, county: CountyId, lat: f64, lon: f64, cat: Category| {
            if category_of.insert(id, cat).is_some() {
                errors.push(format!("{file}: facility_id {id} is used more than once"));
            }
            if !county_ids.contains(&county) {
                errors.push(format!("{file}: facility {id} references unknown county {county}"));
            }
            if let Err(e) = GeoPoint::new(lat, lon) {
                errors.push(format!("{file}: facility {id}: {e}"));
            }
        };
        for r in &self.stach {
            roster(STACH_FILE, r.facility_id, r.county_id, r.lat, r.lon, Category::Stach);
        }
        for r in &self.ltach {
            roster(LTACH_FILE, r.facility_id, r.county_id, r.lat, r.lon, Category::Ltach);
        }
        for r in &self.nh {
            roster(NH_FILE, r.facility_id, r.county_id, r.lat, r.lon, Category::Nh);
        }
        for r in &self.stach {
            if !(0.0..=100.0).contains(&r.pct_out_of_state) {
                errors.push(format!(
                    "{STACH_FILE}: facility {} pct_out_of_state {} outside [0, 100]",
                    r.facility_id, r.pct_out_of_state
                ));
            }
            if r.beds_nonicu + r.beds_icu == 0 {
                errors.push(format!("{STACH_FILE}: facility {} has no beds", r.facility_id));
            }
        }
        for r in &self.ltach {
            if r.beds == 0 {
                errors.push(format!("{LTACH_FILE}: facility {} has no beds", r.facility_id));
            }
        }
        for r in &self.nh {
            if r.beds == 0 {
                errors.push(format!("{NH_FILE}: facility {} has no beds", r.facility_id));
            }
            if r.starting_occupancy > r.beds {
                errors.push(format!(
                    "{NH_FILE}: facility {} starting_occupancy {} exceeds beds {}",
                    r.facility_id, r.starting_occupancy, r.beds
                ));
            }
        }
        if self.stach.is_empty() {
            errors.push(format!("{STACH_FILE}: no hospitals"));
        }
        if self.ltach.is_empty() {
            errors.push(format!("{LTACH_FILE}: no LTACHs"));
        }
        if self.nh.is_empty() {
            errors.push(format!("{NH_FILE}: no nursing homes"));
        }
        let is = |id: FacilityId, cat: Category| category_of.get(&id) == Some(&cat);
        for r in &self.discharges {
            if !is(r.facility_id, Category::Stach) {
                errors.push(format!(
                    "{DISCHARGES_FILE}: unknown hospital facility_id {}",
                    r.facility_id
                ));
            }
        }
        for r in &self.county_shares {
            if !is(r.facility_id, Category::Stach) {
                errors.push(format!(
                    "{COUNTY_SHARES_FILE}: unknown hospital facility_id {}",
                    r.facility_id
                ));
            }
            if !county_ids.contains(&r.county_id) {
                errors.push(format!("{COUNTY_SHARES_FILE}: unknown county_id {}", r.county_id));
            }
        }
        let mut los_ids = BTreeSet::new();
        for r in &self.los {
            if !(is(r.facility_id, Category::Stach) || is(r.facility_id, Category::Nh)) {
                errors.push(format!(
                    "{LOS_FILE}: facility_id {} is not a hospital or nursing home",
                    r.facility_id
                ));
            }
            if !los_ids.insert(r.facility_id) {
                errors.push(format!("{LOS_FILE}: duplicate row for facility {}", r.facility_id));
            }
            if !(r.mean_los_days > 0.0 && r.mean_los_days.is_finite())
                || !(r.sd_los_days >= 0.0 && r.sd_los_days.is_finite())
            {
                errors.push(format!(
                    "{LOS_FILE}: facility {} has invalid LOS moments ({}, {})",
                    r.facility_id, r.mean_los_days, r.sd_los_days
                ));
            }
        }
        for r in &self.nh {
            if !los_ids.contains(&r.facility_id) {
                errors.push(format!("{LOS_FILE}: no row for nursing home {}", r.facility_id));
            }
        }
        for r in &self.community_admissions {
            if !county_ids.contains(&r.county_id) {
                errors.push(format!(
                    "{COMMUNITY_ADMISSIONS_FILE}: unknown county_id {}",
                    r.county_id
                ));
            }
            if r.category == Category::Community {
                errors.push(format!(
                    "{COMMUNITY_ADMISSIONS_FILE}: county {} lists the community as a destination",
                    r.county_id
                ));
            }
        }
        let mut pop_unknown = BTreeSet::new();
        for r in &self.population {
            if !county_ids.contains(&r.county) {
                pop_unknown.insert(r.county);
            }
        }
        for c in pop_unknown {
            errors.push(format!("{POPULATION_FILE}: unknown county_id {c}"));
        }
        if self.population.is_empty() {
            errors.push(format!("{POPULATION_FILE}: empty population"));
        } else if (self.population.len() as u64) > self.parameters.population_reference {
            errors.push(format!(
                "{POPULATION_FILE}: {} rows exceed population_reference {}",
                self.population.len(),
                self.parameters.population_reference
            ));
        }
        match (
            &self.capacity_overrides,
            self.parameters.use_facility_capacity_overrides,
        ) {
            (None, true) => errors.push(format!(
                "use_facility_capacity_overrides is set but {CAPACITY_FILE} is missing"
            )),
            (Some(rows), _) => {
                for r in rows {
                    if !is(r.facility_id, Category::Stach) {
                        errors.push(format!(
                            "{CAPACITY_FILE}: unknown hospital facility_id {}",
                            r.facility_id
                        ));
                    }
                    for (name, v) in [("nonicu_fill", r.nonicu_fill), ("icu_fill", r.icu_fill)] {
                        if !(0.0..=1.0).contains(&v) {
                            errors.push(format!(
                                "{CAPACITY_FILE}: facility {} {name} {v} outside [0, 1]",
                                r.facility_id
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
        if let Some(d) = &self.distances {
            for m in [&d.stach, &d.ltach, &d.nh] {
                let cat = m.category();
                for c in &self.counties {
                    for id in category_of.iter().filter(|(_, k)| **k == cat).map(|(id, _)| *id) {
                        if m.get(c.county_id, id).is_none() {
                            errors.push(format!(
                                "{}: missing distance for county {} facility {id}",
                                distance_file(cat),
                                c.county_id
                            ));
                        }
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// Supplied distance matrices, or great-circle distances from the centroids.
    pub fn distances(&self) -> Result<Distances> {
        match &self.distances {
            Some(d) => Ok(d.clone()),
            None => Distances::build(&self.counties, &self.stach, &self.ltach, &self.nh),
        }
    }

    /// Expected full-scale population per (county, age group) once the
    /// population file is expanded to `population_reference` rows.
    pub fn expected_population(&self) -> BTreeMap<(CountyId, AgeGroup), f64> {
        let factor = self.parameters.population_reference as f64 / self.population.len().max(1) as f64;
        let mut out = BTreeMap::new();
        for r in &self.population {
            *out.entry((r.county, r.age_group())).or_insert(0.0) += factor;
        }
        out
    }

    pub fn los_row(&self, id: FacilityId) -> Option<&LosRow> {
        self.los.iter().find(|r| r.facility_id == id)
    }
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    let text = io::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Scenario directory from an explicit path or the environment.
pub fn resolve_dir(explicit: Option<PathBuf>) -> Result<PathBuf> {
    explicit
        .or_else(|| std::env::var_os(SCENARIO_ENV).map(PathBuf::from))
        .ok_or_else(|| Error::Scenario(format!("no scenario given; pass --scenario or set {SCENARIO_ENV}")))
}
