//! The flat `key=value` parameter file.
//!
//! Keys are snake-cased parameter names. Blank lines and `#` comments are
//! ignored. Unknown keys are rejected; omitted keys take the documented
//! default and are reported back to the caller so they can be logged.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::ComorbidityRates;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IcuMultiplier {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl IcuMultiplier {
    pub const AUTO: IcuMultiplier = IcuMultiplier::Auto(AutoTag::Auto);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    // starting fills
    pub ltach_fill: f64,
    pub non_icu_fill: f64,
    pub icu_fill: f64,

    // movement
    pub nursing_home_death: f64,
    pub ltach_hospital: f64,
    pub ltach_nh: f64,
    pub ltach_death: f64,
    pub ltach_65_plus: f64,
    pub nh_stach_nh: f64,
    pub nh_community: f64,

    // distance rules
    pub nursing_home_closest_n: u32,
    pub nursing_home_attempts: u32,
    pub ltach_closest_n: u32,
    pub ltach_attempts: u32,
    pub max_distance: f64,

    // run
    pub n_agents: u64,
    pub population_reference: u64,
    pub days: u32,
    pub seed: u64,
    pub use_facility_capacity_overrides: bool,
    pub readmission_enabled: bool,

    // ICU logistic model
    pub icu_multiplier: IcuMultiplier,
    pub icu_intercept: f64,
    pub icu_b_age1: f64,
    pub icu_b_age2: f64,
    pub icu_b_comorbid: f64,
    pub icu_b_los: f64,
    pub icu_b_bedcount: f64,

    pub ltach_los_mean: f64,
    pub ltach_los_sd: f64,

    pub concurrent_conditions_age0: f64,
    pub concurrent_conditions_age1: f64,
    pub concurrent_conditions_age2: f64,

    /// Draws in the cohort used to age each LOS distribution.
    pub aging_cohort_draws: u32,

    // validation thresholds
    pub pattern1_mean_tol: f64,
    pub pattern1_sd_tol: f64,
    pub pattern1_min_admissions: u64,
    pub pattern2_tol: f64,
    pub pattern2_min_census: f64,
    pub pattern2_trend_tol: f64,
    pub pattern3_tol: f64,
    pub pattern3_min_target: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            ltach_fill: 0.9,
            non_icu_fill: 0.65,
            icu_fill: 0.50,
            nursing_home_death: 0.15,
            ltach_hospital: 0.071,
            ltach_nh: 0.449,
            ltach_death: 0.01,
            ltach_65_plus: 0.75,
            nh_stach_nh: 0.80,
            nh_community: 0.67,
            nursing_home_closest_n: 30,
            nursing_home_attempts: 30,
            ltach_closest_n: 10,
            ltach_attempts: 3,
            max_distance: 200.0,
            n_agents: 100_000,
            population_reference: 10_600_823,
            days: 365,
            seed: 42,
            use_facility_capacity_overrides: false,
            readmission_enabled: false,
            icu_multiplier: IcuMultiplier::AUTO,
            icu_intercept: -2.2,
            icu_b_age1: 0.3,
            icu_b_age2: 0.6,
            icu_b_comorbid: 0.5,
            icu_b_los: 0.05,
            icu_b_bedcount: 0.1,
            ltach_los_mean: 25.0,
            ltach_los_sd: 10.0,
            concurrent_conditions_age0: 0.0,
            concurrent_conditions_age1: 0.2374,
            concurrent_conditions_age2: 0.5497,
            aging_cohort_draws: 20_000,
            pattern1_mean_tol: 0.02,
            pattern1_sd_tol: 0.05,
            pattern1_min_admissions: 1000,
            pattern2_tol: 0.05,
            pattern2_min_census: 100.0,
            pattern2_trend_tol: 0.02,
            pattern3_tol: 0.05,
            pattern3_min_target: 10_000.0,
        }
    }
}

/// Every key accepted in a parameter file, in file order.
pub const KEYS: &[&str] = &[
    "ltach_fill",
    "non_icu_fill",
    "icu_fill",
    "nursing_home_death",
    "ltach_hospital",
    "ltach_nh",
    "ltach_death",
    "ltach_65_plus",
    "nh_stach_nh",
    "nh_community",
    "nursing_home_closest_n",
    "nursing_home_attempts",
    "ltach_closest_n",
    "ltach_attempts",
    "max_distance",
    "n_agents",
    "population_reference",
    "days",
    "seed",
    "use_facility_capacity_overrides",
    "readmission_enabled",
    "icu_multiplier",
    "icu_intercept",
    "icu_b_age1",
    "icu_b_age2",
    "icu_b_comorbid",
    "icu_b_los",
    "icu_b_bedcount",
    "ltach_los_mean",
    "ltach_los_sd",
    "concurrent_conditions_age0",
    "concurrent_conditions_age1",
    "concurrent_conditions_age2",
    "aging_cohort_draws",
    "pattern1_mean_tol",
    "pattern1_sd_tol",
    "pattern1_min_admissions",
    "pattern2_tol",
    "pattern2_min_census",
    "pattern2_trend_tol",
    "pattern3_tol",
    "pattern3_min_target",
];

fn typed_value(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    match raw.to_ascii_lowercase().as_str() {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        other => toml::Value::String(other.to_string()),
    }
}

impl Parameters {
    /// Parses parameter text. Returns the parameters and the keys that were
    /// omitted (and therefore defaulted).
    pub fn parse(text: &str) -> Result<(Parameters, Vec<&'static str>)> {
        let mut table = toml::map::Map::new();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected key=value, got '{line}'", i + 1));
                continue;
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                errors.push(format!("line {}: unknown parameter '{key}'", i + 1));
                continue;
            }
            if table.insert(key.to_string(), typed_value(value.trim())).is_some() {
                errors.push(format!("line {}: duplicate parameter '{key}'", i + 1));
            }
        }
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let defaulted = KEYS.iter().copied().filter(|k| !table.contains_key(*k)).collect();
        let params: Parameters = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::input(format!("parameters: {}", e.message())))?;
        params.validate()?;
        Ok((params, defaulted))
    }

    /// Renders every parameter; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let value = toml::Value::try_from(self).expect("parameters serialize");
        let table = value.as_table().expect("parameters are a table");
        let mut out = String::new();
        for key in KEYS {
            let v = &table[*key];
            let rendered = match v {
                toml::Value::String(s) => s.clone(),
                toml::Value::Float(f) => format!("{f:?}"),
                other => other.to_string(),
            };
            let _ = writeln!(out, "{key}={rendered}");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let proportions = [
            ("ltach_fill", self.ltach_fill),
            ("non_icu_fill", self.non_icu_fill),
            ("icu_fill", self.icu_fill),
            ("nursing_home_death", self.nursing_home_death),
            ("ltach_hospital", self.ltach_hospital),
            ("ltach_nh", self.ltach_nh),
            ("ltach_death", self.ltach_death),
            ("ltach_65_plus", self.ltach_65_plus),
            ("nh_stach_nh", self.nh_stach_nh),
            ("nh_community", self.nh_community),
            ("concurrent_conditions_age0", self.concurrent_conditions_age0),
            ("concurrent_conditions_age1", self.concurrent_conditions_age1),
            ("concurrent_conditions_age2", self.concurrent_conditions_age2),
        ];
        for (name, v) in proportions {
            if !(0.0..=1.0).contains(&v) {
                errors.push(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        for (name, v) in [
            ("ltach_fill", self.ltach_fill),
            ("non_icu_fill", self.non_icu_fill),
            ("icu_fill", self.icu_fill),
        ] {
            if v <= 0.0 {
                errors.push(format!("{name} must be positive"));
            }
        }
        if self.ltach_hospital + self.ltach_nh > 1.0 {
            errors.push("ltach_hospital + ltach_nh exceeds 1".into());
        }
        for (name, v) in [
            ("nursing_home_closest_n", self.nursing_home_closest_n),
            ("nursing_home_attempts", self.nursing_home_attempts),
            ("ltach_closest_n", self.ltach_closest_n),
            ("ltach_attempts", self.ltach_attempts),
            ("days", self.days),
            ("aging_cohort_draws", self.aging_cohort_draws),
        ] {
            if v < 1 {
                errors.push(format!("{name} must be at least 1"));
            }
        }
        if self.n_agents < 1 {
            errors.push("n_agents must be at least 1".into());
        }
        if self.population_reference < self.n_agents {
            errors.push(format!(
                "population_reference {} is smaller than n_agents {}",
                self.population_reference, self.n_agents
            ));
        }
        if !(self.max_distance > 0.0) {
            errors.push("max_distance must be positive".into());
        }
        if let IcuMultiplier::Fixed(m) = self.icu_multiplier {
            if !(m >= 0.0 && m.is_finite()) {
                errors.push(format!("icu_multiplier must be non-negative or 'auto', got {m}"));
            }
        }
        if !(self.ltach_los_mean > 0.0) || self.ltach_los_sd < 0.0 {
            errors.push("ltach_los_mean must be positive and ltach_los_sd non-negative".into());
        }
        if self.readmission_enabled {
            errors.push("readmission_enabled: the readmission pathway is not active in this model".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn comorbidity(&self) -> ComorbidityRates {
        ComorbidityRates([
            self.concurrent_conditions_age0,
            self.concurrent_conditions_age1,
            self.concurrent_conditions_age2,
        ])
    }

    /// `n / p`, the factor applied to full-scale counts.
    pub fn scale(&self) -> f64 {
        self.n_agents as f64 / self.population_reference as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_values() {
        let p = Parameters::default();
        assert_eq!(p.ltach_fill, 0.9);
        assert_eq!(p.non_icu_fill, 0.65);
        assert_eq!(p.icu_fill, 0.50);
        assert_eq!(p.nursing_home_death, 0.15);
        assert_eq!(p.ltach_hospital, 0.071);
        assert_eq!(p.ltach_nh, 0.449);
        assert_eq!(p.ltach_death, 0.01);
        assert_eq!(p.ltach_65_plus, 0.75);
        assert_eq!(p.nh_stach_nh, 0.80);
        assert_eq!(p.nh_community, 0.67);
        assert_eq!(p.nursing_home_closest_n, 30);
        assert_eq!(p.nursing_home_attempts, 30);
        assert_eq!(p.ltach_closest_n, 10);
        assert_eq!(p.ltach_attempts, 3);
        assert_eq!(p.max_distance, 200.0);
        assert_eq!(p.population_reference, 10_600_823);
    }

    #[test]
    fn omitted_keys_default_and_are_reported() {
        let (p, defaulted) = Parameters::parse("# desk\nn_agents = 5000\nseed=7\n\nmax_distance=150\n").unwrap();
        assert_eq!(p.n_agents, 5000);
        assert_eq!(p.seed, 7);
        assert_eq!(p.max_distance, 150.0);
        assert_eq!(p.non_icu_fill, 0.65);
        assert!(defaulted.contains(&"non_icu_fill"));
        assert!(!defaulted.contains(&"seed"));
        assert_eq!(defaulted.len(), KEYS.len() - 3);
    }

    #[test]
    fn multiplier_auto_or_number() {
        let (p, _) = Parameters::parse("icu_multiplier=auto").unwrap();
        assert_eq!(p.icu_multiplier, IcuMultiplier::AUTO);
        let (p, _) = Parameters::parse("icu_multiplier=0.4").unwrap();
        assert_eq!(p.icu_multiplier, IcuMultiplier::Fixed(0.4));
        let (p, _) = Parameters::parse("icu_multiplier=1").unwrap();
        assert_eq!(p.icu_multiplier, IcuMultiplier::Fixed(1.0));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(Parameters::parse("bogus=1"), Err(Error::Validation(_))));
        assert!(Parameters::parse("seed=1\nseed=2").is_err());
        assert!(Parameters::parse("non_icu_fill=1.5").is_err());
        assert!(Parameters::parse("non_icu_fill=0").is_err());
        assert!(Parameters::parse("readmission_enabled=true").is_err());
        assert!(Parameters::parse("n_agents=10\npopulation_reference=5").is_err());
        assert!(Parameters::parse("just words").is_err());
        assert!(Parameters::parse("days=abc").is_err());
    }

    #[test]
    fn text_roundtrip_is_lossless() {
        let mut p = Parameters::default();
        p.seed = 123_456_789_012;
        p.icu_multiplier = IcuMultiplier::Fixed(0.123456789);
        p.ltach_los_sd = 9.87654321;
        let (back, defaulted) = Parameters::parse(&p.to_text()).unwrap();
        assert_eq!(back, p);
        assert!(defaulted.is_empty());
        let d = Parameters::default();
        assert_eq!(Parameters::parse(&d.to_text()).unwrap().0, d);
    }
}
