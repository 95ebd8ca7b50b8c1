//! Python bindings: scenarios, Monte Carlo runs, sweeps, verification and
//! the channel model. Reports come back as plain dicts and lists.

use fadetrack_cli::scenario::apply_override;
use fadetrack_cli::verify::run_verify;
use fadetrack_core::channel::{ber_bfsk, packet_success_prob, power_for_target_prob};
use fadetrack_core::dynamics::{transition_matrix, MotionParams};
use fadetrack_core::filter::FilterVariant;
use fadetrack_core::numerics::truncated_normal_second_moment;
use fadetrack_core::sim::{power_map as core_power_map, run_monte_carlo, run_sweep, MonteCarloOutput, ScenarioConfig};
use fadetrack_core::Error as CoreError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Config(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn variant(label: &str) -> PyResult<FilterVariant> {
    FilterVariant::ALL
        .into_iter()
        .find(|v| v.label() == label)
        .ok_or_else(|| PyValueError::new_err(format!("unknown variant {label:?}; expected Fc, eFc or nFc")))
}

/// A validated scenario description.
#[pyclass(module = "fadetrack", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Scenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// The built-in 20-node reference scenario.
    #[staticmethod]
    fn reference() -> Self {
        Self { cfg: ScenarioConfig::reference() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ScenarioConfig::from_json(text).map(|cfg| Self { cfg }).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.cfg.to_json_pretty()
    }

    /// Copy with `key=value` overrides applied (dotted paths, JSON values).
    #[pyo3(signature = (*overrides))]
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        let mut tree = serde_json::to_value(&self.cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        for o in &overrides {
            apply_override(&mut tree, o).map_err(PyValueError::new_err)?;
        }
        let cfg: ScenarioConfig = serde_json::from_value(tree).map_err(|e| PyValueError::new_err(e.to_string()))?;
        cfg.validate().map_err(py_err)?;
        Ok(Self { cfg })
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.cfg.nodes
    }

    #[getter]
    fn steps(&self) -> usize {
        self.cfg.steps
    }

    #[getter]
    fn runs(&self) -> usize {
        self.cfg.runs
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.cfg.master_seed
    }

    #[getter]
    fn variants(&self) -> Vec<&'static str> {
        self.cfg.variants.iter().map(|v| v.label()).collect()
    }

    /// Sensor positions for `run`, metres.
    #[pyo3(signature = (run = 0))]
    fn positions(&self, run: usize) -> Vec<[f64; 3]> {
        self.cfg.positions(run)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(nodes={}, steps={}, runs={}, master_seed={})",
            self.cfg.nodes, self.cfg.steps, self.cfg.runs, self.cfg.master_seed
        )
    }
}

type Track = Vec<[f64; 3]>;

/// Aggregated Monte Carlo result of one variant.
#[pyclass(module = "fadetrack", frozen)]
struct MonteCarloResult {
    out: MonteCarloOutput,
    initial: fadetrack_core::filter::NodeEstimate,
}

#[pymethods]
impl MonteCarloResult {
    #[getter]
    fn variant(&self) -> &'static str {
        self.out.report.variant.label()
    }

    #[getter]
    fn rmse_position(&self) -> Vec<f64> {
        self.out.report.rmse_position().to_vec()
    }

    #[getter]
    fn rmse_velocity(&self) -> Vec<f64> {
        self.out.report.rmse_velocity().to_vec()
    }

    #[getter]
    fn runs_completed(&self) -> usize {
        self.out.report.runs_completed
    }

    /// `(position m, position se, velocity m/s, velocity se)` over the
    /// steady-state window.
    #[getter]
    fn steady_state(&self) -> (f64, f64, f64, f64) {
        let s = &self.out.report.steady_state;
        (s.rmse_position_m, s.rmse_position_se_m, s.rmse_velocity_m_per_s, s.rmse_velocity_se_m_per_s)
    }

    /// Truth positions and node-averaged estimates of the `index`-th
    /// completed run, including the initial step.
    #[pyo3(signature = (index = 0))]
    fn trajectory(&self, index: usize) -> PyResult<(Track, Track)> {
        let r = self
            .out
            .runs
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("only {} completed runs", self.out.runs.len())))?;
        let truth = r.truth.iter().map(|t| t.position().into()).collect();
        Ok((truth, r.mean_positions(&self.initial)))
    }

    /// The full metrics report as a dict.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.out.report)
    }
}

#[pyfunction]
#[pyo3(signature = (scenario, variant = None, workers = 1))]
fn simulate(py: Python<'_>, scenario: &Scenario, variant: Option<&str>, workers: usize) -> PyResult<MonteCarloResult> {
    let v = match variant {
        Some(label) => self::variant(label)?,
        None => scenario.cfg.variants[0],
    };
    let cfg = scenario.cfg.clone();
    let out = py.detach(move || run_monte_carlo(&cfg, v, workers)).map_err(py_err)?;
    Ok(MonteCarloResult { out, initial: scenario.cfg.initial_estimate() })
}

/// Runs every configured variant; returns `{label: MonteCarloResult}`.
#[pyfunction]
#[pyo3(signature = (scenario, workers = 1))]
fn compare(py: Python<'_>, scenario: &Scenario, workers: usize) -> PyResult<Vec<(String, MonteCarloResult)>> {
    scenario
        .cfg
        .variants
        .iter()
        .map(|v| Ok((v.label().to_string(), simulate(py, scenario, Some(v.label()), workers)?)))
        .collect()
}

/// Reports (as dicts) for each level of the scenario's sweep list.
#[pyfunction]
#[pyo3(signature = (scenario, workers = 1))]
fn sweep<'py>(py: Python<'py>, scenario: &Scenario, workers: usize) -> PyResult<Bound<'py, PyAny>> {
    let levels = scenario
        .cfg
        .sweep
        .clone()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| PyValueError::new_err("scenario defines no sweep levels"))?;
    let cfg = scenario.cfg.clone();
    let reports = py.detach(move || run_sweep(&cfg, &levels, cfg.variants[0], workers)).map_err(py_err)?;
    to_py(py, &reports)
}

/// `[(power_mw, ber, q)]` over the scenario's power grid.
#[pyfunction]
fn power_map(scenario: &Scenario) -> Vec<(f64, f64, f64)> {
    let grid = scenario.cfg.power_map.unwrap_or_default();
    core_power_map(&scenario.cfg.channel.params(), &grid)
        .into_iter()
        .map(|r| (r.power_mw, r.ber, r.q))
        .collect()
}

/// Property checks; returns `(all_passed, report dict)`.
#[pyfunction]
#[pyo3(signature = (scenario, workers = 1))]
fn verify<'py>(py: Python<'py>, scenario: &Scenario, workers: usize) -> PyResult<(bool, Bound<'py, PyAny>)> {
    let cfg = scenario.cfg.clone();
    let report = py.detach(move || run_verify(&cfg, workers)).map_err(py_err)?;
    Ok((report.failed().is_empty(), to_py(py, &report.body)?))
}

/// Bit error rate at transmit power `power_mw` with the scenario's channel.
#[pyfunction]
fn bit_error_rate(scenario: &Scenario, power_mw: f64) -> f64 {
    ber_bfsk(power_mw * 1e-3, &scenario.cfg.channel.params())
}

#[pyfunction]
fn packet_success(ber: f64, bits: u32) -> f64 {
    packet_success_prob(ber, bits)
}

/// Power in mW needed for packet success probability `q`.
#[pyfunction]
fn power_for_success(scenario: &Scenario, q: f64) -> PyResult<f64> {
    power_for_target_prob(q, &scenario.cfg.channel.params()).map(|w| w * 1e3).map_err(py_err)
}

/// `E[ε²]` of a zero-mean normal with scale `sigma` truncated to `±delta`.
#[pyfunction]
fn truncated_second_moment(sigma: f64, delta: f64) -> f64 {
    truncated_normal_second_moment(sigma, delta)
}

/// Coordinated-turn transition matrix, row-major.
#[pyfunction]
fn turn_transition(turn_rate: f64, period: f64) -> Vec<Vec<f64>> {
    let f = transition_matrix(&MotionParams { turn_rate, period, noise_intensity: 0.0 });
    f.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[pymodule]
fn fadetrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<MonteCarloResult>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(power_map, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(bit_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(packet_success, m)?)?;
    m.add_function(wrap_pyfunction!(power_for_success, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_second_moment, m)?)?;
    m.add_function(wrap_pyfunction!(turn_transition, m)?)?;
    Ok(())
}
