//! Python bindings: experiments, replay, the MiniQuest environment and the
//! model primitives. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use glow_core::env::{Environment, MiniQuest as CoreMiniQuest};
use glow_core::experiment::{build_report, replay_from_log, run_experiment, ExperimentConfig, Overrides};
use glow_core::model::{self, Fingerprint, Step, Trajectory};
use glow_core::variance::{simulate_estimators, VarianceExperiment};
use glow_core::world;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

create_exception!(glow, GlowError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    GlowError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = value.extract::<String>() {
        return Ok(s);
    }
    py.import("json")?.call_method1("dumps", (value,))?.extract()
}

fn steps(rewards: &[i64]) -> Vec<Step> {
    let mut score = 0;
    rewards
        .iter()
        .enumerate()
        .map(|(i, &reward)| {
            score += reward;
            Step {
                action: format!("step {i}"),
                observation: String::new(),
                reward,
                score_after: score,
                done: false,
                valid_actions: Vec::new(),
                fingerprint_after: Fingerprint::of_bytes(format!("{i}").as_bytes()),
                inventory: None,
            }
        })
        .collect()
}

/// Maximum cumulative reward over all prefixes of `rewards`.
#[pyfunction]
fn trajectory_value(rewards: Vec<i64>) -> PyResult<i64> {
    model::trajectory_value(&steps(&rewards)).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Lower bound on state selections when every episode uses its full cap.
#[pyfunction]
fn min_state_selections(budget: i64, episode_cap: i64, n: i64) -> PyResult<i64> {
    model::min_state_selections(budget, episode_cap, n).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Top-k trajectories by (peak value desc, id desc), built from reward lists.
#[pyclass]
struct Frontier {
    inner: model::Frontier,
}

#[pymethods]
impl Frontier {
    #[new]
    fn new(k: usize) -> PyResult<Self> {
        if k == 0 {
            return Err(PyValueError::new_err("k must be at least 1"));
        }
        Ok(Frontier { inner: model::Frontier::new(k) })
    }

    /// Offers a trajectory; returns whether it was retained.
    fn insert(&mut self, id: u64, rewards: Vec<i64>) -> PyResult<bool> {
        let traj = Trajectory::new(id, 0, 0, steps(&rewards)).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(self.inner.insert(traj))
    }

    fn ids(&self) -> Vec<u64> {
        self.inner.ids()
    }

    fn peaks(&self) -> Vec<i64> {
        self.inner.entries.iter().map(|t| t.peak_value).collect()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// The built-in deterministic text game.
#[pyclass]
struct MiniQuest {
    inner: CoreMiniQuest,
}

#[pymethods]
impl MiniQuest {
    #[new]
    fn new() -> Self {
        MiniQuest { inner: CoreMiniQuest::new() }
    }

    #[pyo3(signature = (seed=0))]
    fn reset<'py>(&mut self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let r = self.inner.reset(seed).map_err(err)?;
        to_py(py, &r)
    }

    fn step<'py>(&mut self, py: Python<'py>, action: &str) -> PyResult<Bound<'py, PyAny>> {
        let r = self.inner.step(action).map_err(err)?;
        to_py(py, &r)
    }

    fn fingerprint(&mut self) -> PyResult<String> {
        Ok(self.inner.fingerprint().map_err(err)?.as_str().to_string())
    }
}

/// Validates a config (dict or JSON text) and returns its canonical form.
#[pyfunction]
fn load_config<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_json(&from_py(py, config)?).map_err(err)?;
    py.import("json")?.call_method1("loads", (cfg.to_canonical_json(),))
}

fn overrides(kw: Option<&Bound<'_, PyDict>>) -> PyResult<Overrides> {
    let mut o = Overrides::default();
    let Some(kw) = kw else { return Ok(o) };
    for (key, value) in kw.iter() {
        let key: String = key.extract()?;
        let text = || value.extract::<String>();
        match key.as_str() {
            "env" => o.env = Some(text()?.parse().map_err(PyValueError::new_err)?),
            "seeds" => o.seeds = Some(value.extract()?),
            "budget" => o.budget = Some(value.extract()?),
            "episode_cap" => o.episode_cap = Some(value.extract()?),
            "n" => o.n = Some(value.extract()?),
            "k" => o.k = Some(value.extract()?),
            "selection" => o.selection = Some(text()?.parse().map_err(PyValueError::new_err)?),
            "reflection" => o.reflection = Some(text()?.parse().map_err(PyValueError::new_err)?),
            "verify_replay" => o.verify_replay = value.extract()?,
            "count_replay_steps" => o.count_replay_steps = value.extract()?,
            other => return Err(PyValueError::new_err(format!("unknown override {other:?}"))),
        }
    }
    Ok(o)
}

/// Runs an experiment over its seeds. `config` is a dict, JSON text or None
/// for defaults; keyword arguments override individual settings.
#[pyfunction]
#[pyo3(signature = (config=None, out_dir=None, **kwargs))]
fn run<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
    out_dir: Option<PathBuf>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = match config {
        Some(c) => ExperimentConfig::from_json(&from_py(py, c)?).map_err(err)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&overrides(kwargs)?).map_err(err)?;
    let summary = py.detach(|| run_experiment(&cfg, out_dir.as_deref())).map_err(err)?;
    to_py(py, &summary)
}

/// Groups event logs into a configuration by environment grid.
#[pyfunction]
fn report<'py>(py: Python<'py>, logs: Vec<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let r = build_report(&logs).map_err(err)?;
    let out = to_py(py, &r)?;
    out.set_item("text", r.render_text())?;
    Ok(out)
}

/// Re-executes a logged trajectory (the best one when `id` is None).
#[pyfunction]
#[pyo3(signature = (log, id=None))]
fn replay<'py>(py: Python<'py>, log: PathBuf, id: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let t = py.detach(|| replay_from_log(&log, id, &Default::default())).map_err(err)?;
    to_py(py, &t)
}

/// Empirical variance of single versus averaged advantage estimates.
#[pyfunction]
#[pyo3(signature = (sigmas, m, trials=10_000, seed=1))]
fn variance_lab<'py>(py: Python<'py>, sigmas: Vec<f64>, m: Vec<u32>, trials: u32, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let exp = VarianceExperiment::new(&sigmas, &m, trials, seed);
    let r = simulate_estimators(&exp).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn parse_key_states<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &world::parse_key_states(text))
}

#[pyfunction]
fn parse_w_local<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &world::parse_w_local(text))
}

#[pymodule]
fn glow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GlowError", m.py().get_type::<GlowError>())?;
    m.add_class::<Frontier>()?;
    m.add_class::<MiniQuest>()?;
    m.add_function(wrap_pyfunction!(trajectory_value, m)?)?;
    m.add_function(wrap_pyfunction!(min_state_selections, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(variance_lab, m)?)?;
    m.add_function(wrap_pyfunction!(parse_key_states, m)?)?;
    m.add_function(wrap_pyfunction!(parse_w_local, m)?)?;
    Ok(())
}
