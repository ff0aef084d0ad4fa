//! The `patientflow` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::engine::{EventSink, Model, RunReport};
use crate::error::{Error, Result};
use crate::scenario::synthetic::{generate, SyntheticSpec};
use crate::scenario::{io, resolve_dir, Scenario, SCENARIO_ENV};
use crate::validation::{all_patterns, determinism_check, write_summary_file, Expectations};

pub const EVENTS_FILE: &str = "events.csv";
pub const REPORT_FILE: &str = "report.json";
pub const EXPECTATIONS_FILE: &str = "expectations.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CENSUS_FILE: &str = "census.csv";

#[derive(Debug, Parser)]
#[command(
    name = "patientflow",
    version,
    about = "Agent-based simulation of patient movement among healthcare facilities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Scenario directory.
    #[arg(long, env = SCENARIO_ENV)]
    pub scenario: Option<PathBuf>,
    /// Days to simulate; defaults to the parameter file.
    #[arg(long)]
    pub days: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of agents; defaults to the parameter file.
    #[arg(long)]
    pub agents: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario with its ground truth.
    Gen {
        /// TOML spec; overrides --preset.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// desk, minimal or large.
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute the county-to-facility distance matrices of a scenario.
    Distances {
        #[arg(long, env = SCENARIO_ENV)]
        scenario: Option<PathBuf>,
        /// Output directory; defaults to the scenario directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate and write the event log, tallies and expectations.
    Run {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        /// Skip writing the event log.
        #[arg(long)]
        no_events: bool,
    },
    /// Check a run's tallies against the patterns; exit 0 only if all pass.
    Validate {
        /// Output directory of `run`.
        #[arg(long, default_value = "run")]
        run: PathBuf,
        /// Summary CSV; defaults to summary.csv in the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run twice and compare event logs; exit 0 only if identical.
    ReplayCheck {
        #[command(flatten)]
        args: RunArgs,
    },
}

/// Loads the scenario and applies command-line overrides.
pub fn load_with_overrides(args: &RunArgs) -> Result<Scenario> {
    let dir = resolve_dir(args.scenario.clone())?;
    let mut scenario = Scenario::load(&dir)?;
    for key in &scenario.defaulted {
        log::info!("parameter {key} not set; using the default");
    }
    let p = &mut scenario.parameters;
    if let Some(d) = args.days {
        p.days = d;
    }
    if let Some(s) = args.seed {
        p.seed = s;
    }
    if let Some(n) = args.agents {
        p.n_agents = n;
    }
    p.validate()?;
    Ok(scenario)
}

/// Initializes and runs a model for the configured number of days.
pub fn simulate(scenario: &Scenario, events: EventSink) -> Result<Model> {
    let mut model = Model::new(scenario, events)?;
    model.run(scenario.parameters.days)?;
    Ok(model)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    io::write_text(path, &serde_json::to_string_pretty(value)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = io::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

fn write_census(path: &Path, report: &RunReport) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    w.write_record(["day", "facility_id", "census", "icu_census"])?;
    for d in &report.days {
        for (i, fs) in report.facilities.iter().enumerate() {
            w.write_record([
                d.day.to_string(),
                fs.facility_id.to_string(),
                d.census[i].to_string(),
                d.icu_census[i].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen {
            spec,
            preset,
            seed,
            out,
        } => {
            let spec = match spec {
                Some(p) => SyntheticSpec::load(&p)?,
                None => SyntheticSpec::preset(&preset)?,
            };
            let scenario = generate(&spec, seed)?;
            scenario.write(&out)?;
            println!(
                "wrote scenario to {} ({} counties, {} hospitals, {} LTACHs, {} nursing homes)",
                out.display(),
                scenario.counties.len(),
                scenario.stach.len(),
                scenario.ltach.len(),
                scenario.nh.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Distances { scenario, out } => {
            let dir = resolve_dir(scenario)?;
            let sc = Scenario::load(&dir)?;
            let d = sc.distances()?;
            let target = out.unwrap_or(dir);
            std::fs::create_dir_all(&target).map_err(|e| Error::io(&target, e))?;
            d.write(&target)?;
            println!("wrote distance matrices to {}", target.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { args, out, no_events } => {
            let scenario = load_with_overrides(&args)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let sink = if no_events {
                EventSink::Discard
            } else {
                EventSink::file(&out.join(EVENTS_FILE))?
            };
            let started = Instant::now();
            let mut model = simulate(&scenario, sink)?;
            model.finish_events()?;
            let report = model.report();
            write_json(&out.join(REPORT_FILE), &report)?;
            write_json(
                &out.join(EXPECTATIONS_FILE),
                &Expectations::from_model(&model, &scenario),
            )?;
            write_census(&out.join(CENSUS_FILE), &report)?;
            println!(
                "simulated {} days with {} agents (seed {}) in {:.1}s; output in {}",
                report.days_run,
                report.n_agents,
                report.seed,
                started.elapsed().as_secs_f64(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { run, out } => {
            let report: RunReport = read_json(&run.join(REPORT_FILE))?;
            let exp: Expectations = read_json(&run.join(EXPECTATIONS_FILE))?;
            let reports = all_patterns(&report, &exp);
            let path = out.unwrap_or_else(|| run.join(SUMMARY_FILE));
            write_summary_file(&reports, &path)?;
            let mut ok = true;
            for r in &reports {
                let pass = r.passed();
                ok &= pass;
                println!(
                    "pattern {}: {} ({} judged, {} failed)",
                    r.pattern,
                    if pass { "PASS" } else { "FAIL" },
                    r.judged(),
                    r.failures().count()
                );
                for f in r.failures() {
                    println!(
                        "  {}: modeled {:.3} expected {:.3} (rel. error {:.4})",
                        f.entity, f.modeled, f.expected, f.rel_error
                    );
                }
            }
            println!("summary written to {}", path.display());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ReplayCheck { args } => {
            let scenario = load_with_overrides(&args)?;
            let mut logs = Vec::new();
            for _ in 0..2 {
                let mut m = simulate(&scenario, EventSink::memory()?)?;
                logs.push(m.finish_events()?.unwrap_or_default());
            }
            let d = determinism_check(&logs[0], &logs[1]);
            if d.identical {
                println!("identical event logs ({} lines)", d.lines);
                Ok(ExitCode::SUCCESS)
            } else {
                let (line, a, b) = d.first_divergence.expect("divergent");
                println!("event logs differ at line {line}:\n  first:  {a}\n  second: {b}");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

/// Entry point shared by the binary: parses, runs and maps errors to exit 2.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["patientflow", "run", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["patientflow", "frobnicate"]).is_err());
    }

    #[test]
    fn run_flags_parse() {
        let c = Cli::try_parse_from([
            "patientflow",
            "run",
            "--scenario",
            "s",
            "--days",
            "30",
            "--seed",
            "42",
            "--agents",
            "1000",
            "--out",
            "o",
        ])
        .unwrap();
        match c.command {
            Command::Run { args, out, no_events } => {
                assert_eq!(args.days, Some(30));
                assert_eq!(args.seed, Some(42));
                assert_eq!(args.agents, Some(1000));
                assert_eq!(out, PathBuf::from("o"));
                assert!(!no_events);
            }
            other => panic!("{other:?}"),
        }
    }
}
