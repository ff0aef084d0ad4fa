//! Pattern checks on run tallies: LOS moments, census levels and trends,
//! and category-to-category flows. Every report is a pure function of a
//! [`RunReport`] and the [`Expectations`] it is compared against.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Model, RunReport};
use crate::error::{Error, Result};
use crate::ids::{Category, FacilityId};
use crate::scenario::{Parameters, Scenario};
use crate::transitions::{build_four_by_four, FourByFour};

pub const SUMMARY_HEADER: &[&str] = &["pattern", "entity", "modeled", "expected", "rel_error", "pass"];

/// Categories pairs no agent can ever move between.
pub const STRUCTURAL_ZEROS: [(Category, Category); 5] = [
    (Category::Community, Category::Community),
    (Category::Community, Category::Ltach),
    (Category::Ltach, Category::Ltach),
    (Category::Nh, Category::Nh),
    (Category::Nh, Category::Ltach),
];

pub fn rel_error(modeled: f64, expected: f64) -> f64 {
    (modeled - expected).abs() / expected.max(1.0)
}

/// Pass/fail thresholds, read from the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub los_mean: f64,
    pub los_sd: f64,
    pub los_min_admissions: u64,
    pub census: f64,
    pub census_min: f64,
    pub trend: f64,
    pub flows: f64,
    pub flows_min_target: f64,
}

impl From<&Parameters> for Thresholds {
    fn from(p: &Parameters) -> Self {
        Thresholds {
            los_mean: p.pattern1_mean_tol,
            los_sd: p.pattern1_sd_tol,
            los_min_admissions: p.pattern1_min_admissions,
            census: p.pattern2_tol,
            census_min: p.pattern2_min_census,
            trend: p.pattern2_trend_tol,
            flows: p.pattern3_tol,
            flows_min_target: p.pattern3_min_target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosExpectation {
    pub facility_id: FacilityId,
    pub mean: f64,
    pub sd: f64,
}

/// What a run is compared against, at model scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub thresholds: Thresholds,
    pub los: Vec<LosExpectation>,
    /// Expected mean daily census per facility.
    pub census: BTreeMap<FacilityId, f64>,
    /// `truth` when it came from a ground-truth sidecar, `start` otherwise.
    pub census_source: String,
    /// Annual four-by-four targets.
    pub flows: FourByFour,
}

impl Expectations {
    /// LOS moments from the LOS table (LTACHs from the parameters), censuses
    /// from the scenario's truth scaled by `n/p` or else the day-0 census,
    /// and the four-by-four targets of the model's tables.
    pub fn from_model(model: &Model, scenario: &Scenario) -> Expectations {
        let params = model.params();
        let mut los = Vec::new();
        for f in model.roster().iter() {
            let (mean, sd) = match f.category {
                Category::Ltach => (params.ltach_los_mean, params.ltach_los_sd),
                _ => match scenario.los_row(f.id) {
                    Some(r) => (r.mean_los_days, r.sd_los_days),
                    None => continue,
                },
            };
            los.push(LosExpectation {
                facility_id: f.id,
                mean,
                sd,
            });
        }
        let (census, census_source) = match &scenario.truth {
            Some(t) => (
                t.facilities
                    .iter()
                    .map(|f| (f.facility_id, f.census * params.scale()))
                    .collect(),
                "truth".to_string(),
            ),
            None => (
                model
                    .facility_summaries()
                    .iter()
                    .map(|f| (f.facility_id, f.starting_census as f64))
                    .collect(),
                "start".to_string(),
            ),
        };
        Expectations {
            thresholds: Thresholds::from(params),
            los,
            census,
            census_source,
            flows: build_four_by_four(model.tables(), params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Below the size cutoff; reported but not judged.
    Skip,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: u8,
    pub entity: String,
    pub modeled: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub pattern: u8,
    pub rows: Vec<PatternRow>,
}

impl PatternReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PatternRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn judged(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict != Verdict::Skip).count()
    }
}

fn row(pattern: u8, entity: String, modeled: f64, expected: f64, verdict: impl FnOnce(f64) -> Verdict) -> PatternRow {
    let e = rel_error(modeled, expected);
    PatternRow {
        pattern,
        entity,
        modeled,
        expected,
        rel_error: e,
        verdict: verdict(e),
    }
}

/// Modeled LOS moments of the stays that started during the run against the
/// inputs. Facilities below the admissions cutoff are skipped.
pub fn pattern1_los(report: &RunReport, exp: &Expectations) -> PatternReport {
    let t = exp.thresholds;
    let mut rows = Vec::new();
    for e in &exp.los {
        let Some(i) = report.position(e.facility_id) else {
            continue;
        };
        let tally = report.los[i];
        if tally.count == 0 {
            continue;
        }
        let judged = tally.count >= t.los_min_admissions;
        let id = e.facility_id;
        rows.push(row(
            1,
            format!("{id}:admissions"),
            tally.count as f64,
            tally.count as f64,
            |_| Verdict::Skip,
        ));
        rows.push(row(1, format!("{id}:mean_los"), tally.mean(), e.mean, |r| {
            if judged {
                Verdict::of(r <= t.los_mean)
            } else {
                Verdict::Skip
            }
        }));
        rows.push(row(1, format!("{id}:sd_los"), tally.sd(), e.sd, |r| {
            if judged {
                Verdict::of(r <= t.los_sd)
            } else {
                Verdict::Skip
            }
        }));
    }
    PatternReport { pattern: 1, rows }
}

/// Ordinary least-squares slope of `y` against `0, 1, 2, ...`.
pub fn ols_slope(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let xm = (nf - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Drift of a daily series over its length relative to its mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub mean: f64,
    pub slope: f64,
    /// `|slope × days| / mean`.
    pub relative_drift: f64,
}

pub fn trend(series: &[f64]) -> Trend {
    let mean = if series.is_empty() {
        0.0
    } else {
        series.iter().sum::<f64>() / series.len() as f64
    };
    let slope = ols_slope(series);
    let drift = (slope * series.len() as f64).abs();
    Trend {
        mean,
        slope,
        relative_drift: if mean > 0.0 { drift / mean } else { drift },
    }
}

/// Mean census against the expectation and the drift of the daily series,
/// for facilities whose expected census reaches the cutoff.
pub fn pattern2_capacity(report: &RunReport, exp: &Expectations) -> PatternReport {
    let t = exp.thresholds;
    let mut rows = Vec::new();
    for (id, expected) in &exp.census {
        let Some(i) = report.position(*id) else {
            continue;
        };
        let series = report.census_series(i);
        if series.is_empty() {
            continue;
        }
        let judged = *expected >= t.census_min;
        let tr = trend(&series);
        rows.push(row(2, format!("{id}:census"), tr.mean, *expected, |r| {
            if judged {
                Verdict::of(r <= t.census)
            } else {
                Verdict::Skip
            }
        }));
        let drift = tr.slope * series.len() as f64;
        rows.push(PatternRow {
            pattern: 2,
            entity: format!("{id}:trend"),
            modeled: drift,
            expected: 0.0,
            rel_error: tr.relative_drift,
            verdict: if judged {
                Verdict::of(tr.relative_drift <= t.trend)
            } else {
                Verdict::Skip
            },
        });
    }
    PatternReport { pattern: 2, rows }
}

/// The movement matrix against the four-by-four targets, prorated to the
/// number of days run. Structural zeros must be exactly zero.
pub fn pattern3_flows(report: &RunReport, exp: &Expectations) -> PatternReport {
    let t = exp.thresholds;
    let factor = report.days_run as f64 / 365.0;
    let mut rows = Vec::new();
    for from in Category::ALL {
        for to in Category::ALL {
            let modeled = report.moves[from.index()][to.index()] as f64;
            let target = exp.flows.get(from, to) * factor;
            let entity = format!("{from}->{to}");
            let r = if STRUCTURAL_ZEROS.contains(&(from, to)) {
                row(3, entity, modeled, 0.0, |_| Verdict::of(modeled == 0.0))
            } else {
                row(3, entity, modeled, target, |r| {
                    if target >= t.flows_min_target {
                        Verdict::of(r <= t.flows)
                    } else {
                        Verdict::Skip
                    }
                })
            };
            rows.push(r);
        }
    }
    PatternReport { pattern: 3, rows }
}

pub fn all_patterns(report: &RunReport, exp: &Expectations) -> Vec<PatternReport> {
    vec![
        pattern1_los(report, exp),
        pattern2_capacity(report, exp),
        pattern3_flows(report, exp),
    ]
}

pub fn write_summary<W: Write>(reports: &[PatternReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in reports.iter().flat_map(|r| &r.rows) {
        out.write_record([
            r.pattern.to_string(),
            r.entity.clone(),
            format!("{:.6}", r.modeled),
            format!("{:.6}", r.expected),
            format!("{:.6}", r.rel_error),
            r.verdict.label().to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Scenario(e.to_string()))?;
    Ok(())
}

pub fn write_summary_file(reports: &[PatternReport], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_summary(reports, std::io::BufWriter::new(f))
}

/// Outcome of comparing two event logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminismReport {
    pub identical: bool,
    pub lines: usize,
    /// 1-based line number and the two differing records.
    pub first_divergence: Option<(usize, String, String)>,
}

pub fn determinism_check(a: &[u8], b: &[u8]) -> DeterminismReport {
    let la: Vec<&[u8]> = a.split(|c| *c == b'\n').collect();
    let lb: Vec<&[u8]> = b.split(|c| *c == b'\n').collect();
    let n = la.len().max(lb.len());
    for i in 0..n {
        let x = la.get(i).copied().unwrap_or(b"<end of log>");
        let y = lb.get(i).copied().unwrap_or(b"<end of log>");
        if x != y {
            return DeterminismReport {
                identical: false,
                lines: n,
                first_divergence: Some((
                    i + 1,
                    String::from_utf8_lossy(x).into_owned(),
                    String::from_utf8_lossy(y).into_owned(),
                )),
            };
        }
    }
    DeterminismReport {
        identical: true,
        lines: n,
        first_divergence: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{DaySummary, FacilitySummary, LosTally};
    use proptest::prelude::*;

    fn thresholds() -> Thresholds {
        Thresholds::from(&Parameters::default())
    }

    fn report(census: Vec<Vec<u32>>, los: Vec<LosTally>, moves: [[u64; 4]; 4]) -> RunReport {
        let nf = los.len();
        RunReport {
            seed: 1,
            n_agents: 10,
            population_reference: 10,
            days_run: census.len() as u32,
            icu_multiplier: 1.0,
            facilities: (0..nf)
                .map(|i| FacilitySummary {
                    facility_id: FacilityId(i as u32 + 1),
                    category: Category::Stach,
                    beds_nonicu: 0,
                    beds_icu: 0,
                    placeholders_nonicu: 0,
                    placeholders_icu: 0,
                    starting_census: 0,
                    starting_icu_census: 0,
                })
                .collect(),
            days: census
                .into_iter()
                .enumerate()
                .map(|(d, c)| DaySummary {
                    day: d as u32,
                    icu_census: vec![0; c.len()],
                    census: c,
                    ..DaySummary::default()
                })
                .collect(),
            los,
            moves,
            deaths: [0; 4],
            turned_away: 0,
            fully_turned_away: 0,
        }
    }

    fn tally(values: &[u32]) -> LosTally {
        let mut t = LosTally::default();
        values.iter().for_each(|v| t.add(*v));
        t
    }

    fn expectations(census: f64, flows: [[f64; 4]; 4]) -> Expectations {
        Expectations {
            thresholds: thresholds(),
            los: vec![LosExpectation {
                facility_id: FacilityId(1),
                mean: 5.0,
                sd: 1.0,
            }],
            census: [(FacilityId(1), census)].into_iter().collect(),
            census_source: "start".into(),
            flows: FourByFour { targets: flows },
        }
    }

    #[test]
    fn relative_error_floors_expected_at_one() {
        assert_eq!(rel_error(3.0, 0.0), 3.0);
        assert!((rel_error(5.72, 5.77) - 0.05 / 5.77).abs() < 1e-12);
    }

    #[test]
    fn worked_examples() {
        // 5.72 against 5.77 is within 2%; 885.14 against 894 within 5%; 815,414 against 825,150 within 5%
        assert!(rel_error(5.72, 5.77) < 0.02);
        assert!(rel_error(885.14, 894.0) < 0.05);
        assert!(rel_error(815_414.0, 825_150.0) < 0.05);
    }

    #[test]
    fn los_pattern_skips_small_and_judges_large() {
        let mut draws = vec![4; 600];
        draws.extend(vec![6; 600]);
        let r = report(vec![vec![0]], vec![tally(&draws)], [[0; 4]; 4]);
        let p = pattern1_los(&r, &expectations(0.0, [[0.0; 4]; 4]));
        assert!(p.passed());
        assert_eq!(p.judged(), 2);
        let small = report(vec![vec![0]], vec![tally(&[1, 9])], [[0; 4]; 4]);
        let p = pattern1_los(&small, &expectations(0.0, [[0.0; 4]; 4]));
        assert!(p.passed());
        assert_eq!(p.judged(), 0);
        let zero = report(vec![vec![0]], vec![LosTally::default()], [[0; 4]; 4]);
        assert!(pattern1_los(&zero, &expectations(0.0, [[0.0; 4]; 4])).rows.is_empty());
    }

    #[test]
    fn constant_census_has_zero_slope() {
        assert_eq!(ols_slope(&[7.0; 50]), 0.0);
        assert!((ols_slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-12);
        let r = report(vec![vec![150]; 365], vec![LosTally::default()], [[0; 4]; 4]);
        let p = pattern2_capacity(&r, &expectations(150.0, [[0.0; 4]; 4]));
        assert!(p.passed());
        assert_eq!(p.judged(), 2);
    }

    #[test]
    fn ten_percent_yearly_drift_is_flagged() {
        let series: Vec<Vec<u32>> = (0..365)
            .map(|d| vec![(1000.0 * (0.95 + 0.10 * d as f64 / 365.0)).round() as u32])
            .collect();
        let r = report(series, vec![LosTally::default()], [[0; 4]; 4]);
        let p = pattern2_capacity(&r, &expectations(1000.0, [[0.0; 4]; 4]));
        let census = &p.rows[0];
        let trend = &p.rows[1];
        assert_eq!(census.verdict, Verdict::Pass);
        assert_eq!(trend.verdict, Verdict::Fail);
        assert!((trend.rel_error - 0.10).abs() < 0.005);
    }

    #[test]
    fn flows_structural_zeros_and_cutoff() {
        let mut targets = [[0.0; 4]; 4];
        targets[0][1] = 20_000.0;
        targets[1][0] = 5_000.0;
        let mut moves = [[0u64; 4]; 4];
        moves[0][1] = 19_500;
        moves[1][0] = 9_000;
        let r = report(vec![vec![0]; 365], vec![LosTally::default()], moves);
        let p = pattern3_flows(&r, &expectations(0.0, targets));
        assert!(p.passed());
        moves[0][3] = 0;
        moves[3][3] = 1;
        let r = report(vec![vec![0]; 365], vec![LosTally::default()], moves);
        let p = pattern3_flows(&r, &expectations(0.0, targets));
        assert!(!p.passed());
        assert_eq!(p.failures().next().unwrap().entity, "nh->nh");
    }

    #[test]
    fn summary_csv_header() {
        let r = report(vec![vec![0]], vec![LosTally::default()], [[0; 4]; 4]);
        let reports = all_patterns(&r, &expectations(0.0, [[0.0; 4]; 4]));
        let mut buf = Vec::new();
        write_summary(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("pattern,entity,modeled,expected,rel_error,pass\n"));
        assert_eq!(
            text.lines().count(),
            1 + reports.iter().map(|r| r.rows.len()).sum::<usize>()
        );
    }

    #[test]
    fn determinism_reports_first_divergence() {
        let a = b"h\n1,a\n2,b\n";
        assert!(determinism_check(a, a).identical);
        let d = determinism_check(a, b"h\n1,a\n2,c\n");
        assert!(!d.identical);
        assert_eq!(d.first_divergence, Some((3, "2,b".into(), "2,c".into())));
        let short = determinism_check(a, b"h\n1,a\n");
        assert_eq!(short.first_divergence.unwrap().0, 3);
    }

    proptest! {
        #[test]
        fn reports_are_pure(c in prop::collection::vec(0u32..500, 2..60), m in 0u64..50_000) {
            let mut moves = [[0u64; 4]; 4];
            moves[0][1] = m;
            let r = report(c.iter().map(|v| vec![*v]).collect(), vec![tally(&c)], moves);
            let e = expectations(200.0, [[0.0, 30_000.0, 0.0, 0.0]; 4]);
            prop_assert_eq!(all_patterns(&r, &e), all_patterns(&r, &e));
        }
    }
}
