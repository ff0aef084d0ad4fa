//! Python bindings: scenarios, models, validation and replay checks.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use patientflow::engine::{EventSink, Model};
use patientflow::scenario::synthetic::{generate, SyntheticSpec};
use patientflow::scenario::Scenario;
use patientflow::validation::{all_patterns, determinism_check, Expectations, Verdict};
use patientflow::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Logic(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Scenario", module = "patientflow", from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// Loads a scenario directory.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Scenario::load(&path).map(|inner| PyScenario { inner }).map_err(to_py)
    }

    /// Generates a synthetic scenario from a preset (`desk`, `minimal`, `large`).
    #[staticmethod]
    #[pyo3(signature = (preset = "desk", seed = 7))]
    fn generate(preset: &str, seed: u64) -> PyResult<Self> {
        let spec = SyntheticSpec::preset(preset).map_err(to_py)?;
        generate(&spec, seed).map(|inner| PyScenario { inner }).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(to_py)
    }

    #[getter]
    fn n_agents(&self) -> u64 {
        self.inner.parameters.n_agents
    }

    #[setter]
    fn set_n_agents(&mut self, n: u64) -> PyResult<()> {
        self.inner.parameters.n_agents = n;
        self.inner.parameters.validate().map_err(to_py)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.parameters.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.parameters.seed = seed;
    }

    #[getter]
    fn days(&self) -> u32 {
        self.inner.parameters.days
    }

    #[getter]
    fn facility_counts(&self) -> BTreeMap<&'static str, usize> {
        BTreeMap::from([
            ("stach", self.inner.stach.len()),
            ("ltach", self.inner.ltach.len()),
            ("nh", self.inner.nh.len()),
        ])
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(counties={}, stach={}, ltach={}, nh={}, n_agents={})",
            self.inner.counties.len(),
            self.inner.stach.len(),
            self.inner.ltach.len(),
            self.inner.nh.len(),
            self.inner.parameters.n_agents
        )
    }
}

/// One validation row: (pattern, entity, modeled, expected, rel_error, verdict).
type Row = (u8, String, f64, f64, f64, &'static str);

#[pyclass(name = "Model", module = "patientflow", unsendable)]
pub struct PyModel {
    model: Model,
    scenario: Scenario,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (scenario, record_events = false))]
    fn new(scenario: &PyScenario, record_events: bool) -> PyResult<Self> {
        let sink = if record_events {
            EventSink::memory().map_err(to_py)?
        } else {
            EventSink::Discard
        };
        let model = Model::new(&scenario.inner, sink).map_err(to_py)?;
        Ok(PyModel {
            model,
            scenario: scenario.inner.clone(),
        })
    }

    /// Simulates one day and returns its admissions, discharges and deaths.
    fn step(&mut self) -> PyResult<BTreeMap<&'static str, u64>> {
        let d = self.model.step().map_err(to_py)?;
        Ok(BTreeMap::from([
            ("day", d.day as u64),
            ("admissions", d.admissions),
            ("discharges", d.discharges),
            ("deaths", d.deaths),
            ("turned_away", d.turned_away),
        ]))
    }

    fn run(&mut self, days: u32) -> PyResult<()> {
        self.model.run(days).map_err(to_py)
    }

    #[getter]
    fn day(&self) -> u32 {
        self.model.day()
    }

    /// Current census (agents plus placeholders) by facility id.
    fn census(&self) -> BTreeMap<u32, u32> {
        self.model.roster().iter().map(|f| (f.id.0, f.census())).collect()
    }

    /// Realized moves between community, STACH, LTACH and NH.
    fn moves(&self) -> [[u64; 4]; 4] {
        *self.model.moves()
    }

    fn report_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.model.report()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Checks the tallies so far against the three validation patterns.
    fn validate(&self) -> Vec<Row> {
        let exp = Expectations::from_model(&self.model, &self.scenario);
        all_patterns(&self.model.report(), &exp)
            .into_iter()
            .flat_map(|r| r.rows)
            .map(|r| {
                let verdict = match r.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Skip => "skip",
                };
                (r.pattern, r.entity, r.modeled, r.expected, r.rel_error, verdict)
            })
            .collect()
    }

    /// The event log as CSV. Recording stops after this call.
    fn take_events(&mut self) -> PyResult<Option<String>> {
        let bytes = self.model.finish_events().map_err(to_py)?;
        Ok(bytes.map(|b| String::from_utf8_lossy(&b).into_owned()))
    }
}

/// Whether two event logs are identical.
#[pyfunction]
fn logs_identical(a: &str, b: &str) -> bool {
    determinism_check(a.as_bytes(), b.as_bytes()).identical
}

#[pymodule(name = "patientflow")]
fn patientflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(logs_identical, m)?)?;
    Ok(())
}
