//! Python bindings for the gaitbo crate.
//!
//! The module mirrors the Rust API at the granularity a notebook wants:
//! simulate a controller, build costs, train surrogate nets, query GP
//! posteriors, and run Bayesian optimization with a Python objective.
//!
//! Build as a cdylib and import the renamed artifact:
//!
//! ```text
//! cargo build -p gaitbo-py
//! cp target/debug/libgaitbo_py.so gaitbo_py.so
//! python -c "import gaitbo_py"
//! ```

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gaitbo::costs::{score_transform as score_transform_rs, CostSpec};
use gaitbo::data::{generate_dataset as generate_dataset_rs, sobol_grid as sobol_grid_rs};
use gaitbo::gp::{
    acquire_next_features, bo_run, default_hyper, default_log_bounds, expected_improvement,
    feature_ranges, fit_hyperparams as fit_hyperparams_rs, BoSettings, FeatureMap, GpState, Hyper,
    MeanPolicy,
};
use gaitbo::nnet::{read_model, train as train_rs, write_model, Mlp, TrainConfig};
use gaitbo::sim::{
    perturbation_factors, rollout as rollout_rs, rough_ground, Bounds, ControllerFamily,
    GroundProfile, PerturbationFactors, SimConfig, SpeedSegment, TrajectorySummary,
};

fn to_py_err(e: gaitbo::Error) -> PyErr {
    match &e {
        gaitbo::Error::Config(_) | gaitbo::Error::ConfigFile { .. } => {
            PyValueError::new_err(e.to_string())
        }
        gaitbo::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_family(name: &str) -> PyResult<ControllerFamily> {
    match name {
        "gains5" => Ok(ControllerFamily::Gains5),
        "phase_gains13" => Ok(ControllerFamily::PhaseGains13),
        other => Err(PyValueError::new_err(format!(
            "unknown controller family {other:?}, expected \"gains5\" or \"phase_gains13\""
        ))),
    }
}

fn parse_mean(name: &str) -> PyResult<MeanPolicy> {
    match name {
        "zero" => Ok(MeanPolicy::Zero),
        "median" => Ok(MeanPolicy::Median),
        other => Err(PyValueError::new_err(format!(
            "unknown mean policy {other:?}, expected \"zero\" or \"median\""
        ))),
    }
}

fn perturb_from(seed: Option<u64>) -> PerturbationFactors {
    match seed {
        None => PerturbationFactors::identity(),
        Some(s) => perturbation_factors(s),
    }
}

fn ground_from(seed: Option<u64>, extent: f64) -> GroundProfile {
    match seed {
        None => GroundProfile::flat(),
        Some(s) => rough_ground(s, extent),
    }
}

fn summary_to_dict<'py>(py: Python<'py>, s: &TrajectorySummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t_walk", s.t_walk)?;
    d.set_item("energy", s.energy)?;
    d.set_item("x_torso", s.x_torso)?;
    d.set_item("z_torso", s.z_torso)?;
    d.set_item("theta_torso", s.theta_torso)?;
    d.set_item("x_com", s.x_com)?;
    d.set_item("z_com", s.z_com)?;
    d.set_item("v_mean", s.v_mean)?;
    d.set_item("fell", s.fell)?;
    d.set_item("x_fall", s.x_fall)?;
    d.set_item("seg_speeds", s.seg_speeds.clone())?;
    Ok(d)
}

fn summary_from_dict(d: &Bound<'_, PyDict>) -> PyResult<TrajectorySummary> {
    fn field<T: for<'a, 'py> FromPyObject<'a, 'py>>(
        d: &Bound<'_, PyDict>,
        key: &str,
    ) -> PyResult<T> {
        d.get_item(key)?
            .ok_or_else(|| PyValueError::new_err(format!("summary dict is missing {key:?}")))?
            .extract()
            .map_err(|_| PyValueError::new_err(format!("summary field {key:?} has the wrong type")))
    }
    let v_mean: f64 = field(d, "v_mean")?;
    let seg_speeds: Vec<f64> = match d.get_item("seg_speeds")? {
        Some(v) => v.extract()?,
        None => vec![v_mean],
    };
    Ok(TrajectorySummary {
        t_walk: field(d, "t_walk")?,
        energy: field(d, "energy")?,
        x_torso: field(d, "x_torso")?,
        z_torso: field(d, "z_torso")?,
        theta_torso: field(d, "theta_torso")?,
        x_com: field(d, "x_com")?,
        z_com: field(d, "z_com")?,
        v_mean,
        fell: field(d, "fell")?,
        x_fall: field(d, "x_fall")?,
        seg_speeds,
    })
}

/// Planar walker configuration. Construct with defaults and override the
/// common fields by keyword; `schedule` takes `[(steps, v_tgt), ...]` with
/// the last segment running to the horizon.
#[pyclass(frozen, name = "SimConfig")]
struct PySimConfig {
    inner: SimConfig,
}

#[pymethods]
impl PySimConfig {
    #[new]
    #[pyo3(signature = (*, horizon=None, timestep=None, theta_max=None, z_min=None, torso_mass=None, com_offset=None, schedule=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        horizon: Option<f64>,
        timestep: Option<f64>,
        theta_max: Option<f64>,
        z_min: Option<f64>,
        torso_mass: Option<f64>,
        com_offset: Option<f64>,
        schedule: Option<Vec<(u32, f64)>>,
    ) -> PyResult<Self> {
        let mut cfg = SimConfig::default();
        if let Some(v) = horizon {
            cfg.horizon = v;
        }
        if let Some(v) = timestep {
            cfg.timestep = v;
        }
        if let Some(v) = theta_max {
            cfg.theta_max = v;
        }
        if let Some(v) = z_min {
            cfg.z_min = v;
        }
        if let Some(v) = torso_mass {
            cfg.torso_mass = v;
        }
        if let Some(v) = com_offset {
            cfg.com_offset = v;
        }
        if let Some(segs) = schedule {
            cfg.schedule = segs
                .into_iter()
                .map(|(steps, v_tgt)| SpeedSegment { steps, v_tgt })
                .collect();
        }
        cfg.validate().map_err(to_py_err)?;
        Ok(PySimConfig { inner: cfg })
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    #[getter]
    fn timestep(&self) -> f64 {
        self.inner.timestep
    }

    #[getter]
    fn theta_max(&self) -> f64 {
        self.inner.theta_max
    }

    #[getter]
    fn z_min(&self) -> f64 {
        self.inner.z_min
    }

    #[getter]
    fn torso_mass(&self) -> f64 {
        self.inner.torso_mass
    }

    #[getter]
    fn com_offset(&self) -> f64 {
        self.inner.com_offset
    }

    #[getter]
    fn schedule(&self) -> Vec<(u32, f64)> {
        self.inner
            .schedule
            .iter()
            .map(|s| (s.steps, s.v_tgt))
            .collect()
    }

    #[getter]
    fn target_speeds(&self) -> Vec<f64> {
        self.inner.target_speeds()
    }

    fn __repr__(&self) -> String {
        format!(
            "SimConfig(horizon={}, timestep={}, theta_max={}, segments={})",
            self.inner.horizon,
            self.inner.timestep,
            self.inner.theta_max,
            self.inner.schedule.len()
        )
    }
}

/// Simulate one controller and return the trajectory summary as a dict.
///
/// `perturb_seed=None` runs the nominal plant; `ground_seed=None` runs flat
/// ground. Seeded variants draw the bounded mass/inertia/CoM factors and the
/// piecewise ground profile used for robustness evaluations.
#[pyfunction]
#[pyo3(signature = (config, family, params, *, perturb_seed=None, ground_seed=None, ground_extent=16.0))]
fn rollout<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    family: &str,
    params: Vec<f64>,
    perturb_seed: Option<u64>,
    ground_seed: Option<u64>,
    ground_extent: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fam = parse_family(family)?;
    let perturb = perturb_from(perturb_seed);
    let ground = ground_from(ground_seed, ground_extent);
    let s = rollout_rs(&config.inner, fam, &params, &perturb, &ground).map_err(to_py_err)?;
    summary_to_dict(py, &s)
}

/// Bounded multiplicative plant perturbation for a seed, as a dict.
#[pyfunction]
fn perturbation<'py>(py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let p = perturbation_factors(seed);
    let d = PyDict::new(py);
    d.set_item("mass_scale", p.mass_scale)?;
    d.set_item("inertia_scale", p.inertia_scale)?;
    d.set_item("com_scale", p.com_scale)?;
    Ok(d)
}

/// Piecewise-constant ground profile for a seed, as `[(start_x, height)]`.
/// The first segment starts at `-inf` (returned as `float("-inf")`).
#[pyfunction]
#[pyo3(signature = (seed, extent=16.0))]
fn ground_profile(seed: u64, extent: f64) -> Vec<(f64, f64)> {
    rough_ground(seed, extent).breaks().to_vec()
}

/// First `n` points of the scrambled-free Sobol sequence scaled into a box.
#[pyfunction]
fn sobol_grid(low: Vec<f64>, high: Vec<f64>, n: usize) -> PyResult<Vec<Vec<f64>>> {
    let bounds = Bounds::new(low, high).map_err(to_py_err)?;
    sobol_grid_rs(&bounds, n).map_err(to_py_err)
}

/// A cost function instance. Use the `atrias`, `smooth`, or `non_smooth`
/// constructors; `evaluate` accepts the dict `rollout` returns.
#[pyclass(frozen, name = "Cost")]
struct PyCost {
    inner: CostSpec,
}

#[pymethods]
impl PyCost {
    /// Quadratic speed-tracking cost with a `100 - x_fall` fall branch, one
    /// target speed per schedule segment.
    #[staticmethod]
    fn atrias(v_targets: Vec<f64>) -> PyResult<Self> {
        if v_targets.is_empty() {
            return Err(PyValueError::new_err("atrias cost needs target speeds"));
        }
        Ok(PyCost {
            inner: CostSpec::atrias(v_targets),
        })
    }

    /// Smoothly shaped cost with no fall branch; walking longer and farther
    /// always helps.
    #[staticmethod]
    fn smooth(s_tgt: f64) -> Self {
        PyCost {
            inner: CostSpec::smooth(s_tgt),
        }
    }

    /// Linear speed error plus cost of transport, `300 - x_fall` fall
    /// branch. `weight` is the nominal robot weight `m * g` in newtons.
    #[staticmethod]
    fn non_smooth(v_tgt: f64, weight: f64) -> Self {
        PyCost {
            inner: CostSpec::non_smooth(v_tgt, weight),
        }
    }

    fn evaluate(&self, summary: &Bound<'_, PyDict>) -> PyResult<f64> {
        Ok(self.inner.evaluate(&summary_from_dict(summary)?))
    }

    fn failure_cost(&self) -> f64 {
        self.inner.failure_cost()
    }

    #[getter]
    fn walking_threshold(&self) -> f64 {
        self.inner.kind.walking_threshold()
    }

    #[getter]
    fn stable_threshold(&self) -> f64 {
        self.inner.kind.stable_threshold()
    }

    #[getter]
    fn label(&self) -> &'static str {
        self.inner.kind.label()
    }

    fn __repr__(&self) -> String {
        format!("Cost({})", self.inner.kind.label())
    }
}

/// Softplus score of how far a cost lands below the mean walking cost.
#[pyfunction]
fn score_transform(cost: f64, c_walk: f64) -> f64 {
    score_transform_rs(cost, c_walk)
}

/// Feed-forward net with frozen input/output normalizers.
#[pyclass(frozen, name = "Model")]
struct PyModel {
    inner: Mlp,
}

#[pymethods]
impl PyModel {
    fn predict(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.n_inputs() {
            return Err(PyValueError::new_err(format!(
                "model expects {} inputs, got {}",
                self.inner.n_inputs(),
                x.len()
            )));
        }
        Ok(self.inner.predict(&x))
    }

    fn predict_many(&self, xs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        xs.into_iter().map(|x| self.predict(x)).collect()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_model(&path, &self.inner).map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: read_model(&path).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    #[getter]
    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }

    #[getter]
    fn sizes(&self) -> Vec<usize> {
        self.inner.sizes()
    }

    /// Compare backprop gradients against central differences on `(xs, ys)`.
    /// Returns `{max_rel_err, checked, skipped}`; ties in the L1 loss are
    /// skipped, not checked.
    #[pyo3(signature = (xs, ys, eps=1e-6))]
    fn gradient_check<'py>(
        &self,
        py: Python<'py>,
        xs: Vec<Vec<f64>>,
        ys: Vec<Vec<f64>>,
        eps: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let res = gaitbo::nnet::gradient_check(&self.inner, &xs, &ys, eps);
        let d = PyDict::new(py);
        d.set_item("max_rel_err", res.max_rel_err)?;
        d.set_item("checked", res.checked)?;
        d.set_item("skipped", res.skipped)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Model(sizes={:?})", self.inner.sizes())
    }
}

/// Train a net on `(xs, ys)` rows with L1 loss and SGD. Returns the model
/// and a report dict with per-epoch and final train/validation L1.
#[pyfunction]
#[pyo3(signature = (xs, ys, *, hidden=vec![64, 64], epochs=150, batch_size=64, learning_rate=0.02, momentum=0.9, decay_every=50, decay_factor=0.3, val_fraction=0.1, seed=0))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    hidden: Vec<usize>,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    momentum: f64,
    decay_every: usize,
    decay_factor: f64,
    val_fraction: f64,
    seed: u64,
) -> PyResult<(PyModel, Bound<'py, PyDict>)> {
    let cfg = TrainConfig {
        hidden,
        epochs,
        batch_size,
        learning_rate,
        momentum,
        decay_every,
        decay_factor,
        val_fraction,
        seed,
    };
    let (mlp, report) = train_rs(&xs, &ys, &cfg).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("train_l1", report.train_l1)?;
    d.set_item("val_l1", report.val_l1)?;
    d.set_item("final_train_l1", report.final_train_l1)?;
    d.set_item("final_val_l1", report.final_val_l1)?;
    Ok((PyModel { inner: mlp }, d))
}

/// Exact GP posterior over a fixed training set.
///
/// `features` live in whatever space the caller chose; map controller
/// parameters through a net first to reproduce the learned kernels.
#[pyclass(frozen, name = "Gp")]
struct PyGp {
    inner: GpState,
}

#[pymethods]
impl PyGp {
    #[new]
    #[pyo3(signature = (features, y, *, signal2, lengths, noise2, mean="median"))]
    fn new(
        features: Vec<Vec<f64>>,
        y: Vec<f64>,
        signal2: f64,
        lengths: Vec<f64>,
        noise2: f64,
        mean: &str,
    ) -> PyResult<Self> {
        let hyper = Hyper::new(signal2, lengths, noise2).map_err(to_py_err)?;
        let policy = parse_mean(mean)?;
        Ok(PyGp {
            inner: GpState::fit(features, y, hyper, policy).map_err(to_py_err)?,
        })
    }

    /// Posterior `(mean, variance)` at one feature vector.
    fn posterior(&self, feature: Vec<f64>) -> (f64, f64) {
        self.inner.posterior(&feature)
    }

    fn log_marginal(&self) -> f64 {
        self.inner.log_marginal()
    }
}

/// Maximize the marginal likelihood over kernel hyperparameters with
/// restarted Nelder-Mead in log space. Returns a dict with `signal2`,
/// `lengths`, `noise2`, and whether the fit fell back to its starting point.
#[pyfunction]
#[pyo3(signature = (features, y, *, mean="median", seed=0))]
fn fit_hyperparams<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    y: Vec<f64>,
    mean: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = parse_mean(mean)?;
    let bounds = default_log_bounds(&feature_ranges(&features), &y);
    let prev = default_hyper(&bounds);
    let fit = fit_hyperparams_rs(&features, &y, policy, &bounds, &prev, seed);
    let d = PyDict::new(py);
    d.set_item("signal2", fit.hyper.signal2)?;
    d.set_item("lengths", fit.hyper.length)?;
    d.set_item("noise2", fit.hyper.noise2)?;
    d.set_item("fell_back", fit.fell_back)?;
    Ok(d)
}

/// Closed-form expected improvement below `best` for a posterior `(mu, var)`.
#[pyfunction(name = "expected_improvement")]
fn expected_improvement_py(mu: f64, var: f64, best: f64) -> f64 {
    expected_improvement(mu, var, best)
}

fn feature_map_for(kernel: &str, model: Option<&PyModel>) -> PyResult<FeatureMap> {
    match kernel {
        "se" => Ok(FeatureMap::Identity),
        "asymNN" => {
            let m = model.ok_or_else(|| {
                PyValueError::new_err("kernel \"asymNN\" needs model= (a 1-output score net)")
            })?;
            FeatureMap::score_net(m.inner.clone()).map_err(to_py_err)
        }
        "trajNN" => {
            let m = model.ok_or_else(|| {
                PyValueError::new_err("kernel \"trajNN\" needs model= (an 8-output trajectory net)")
            })?;
            FeatureMap::traj_net(m.inner.clone()).map_err(to_py_err)
        }
        other => Err(PyValueError::new_err(format!(
            "unknown kernel {other:?}, expected \"se\", \"asymNN\", or \"trajNN\""
        ))),
    }
}

/// Bayesian optimization of a Python objective over a box.
///
/// `objective(params: list[float]) -> float` is called once per trial, in
/// trial order. A non-finite return records `failure_cost` for that trial
/// and the run continues; a raised exception aborts the whole run and
/// propagates. Returns a dict with the full trace (`params`, `costs`,
/// `best_so_far`) plus `best_params` and `best_cost`.
#[pyfunction]
#[pyo3(signature = (objective, low, high, budget, failure_cost, *, kernel="se", model=None, seed=0, n_uniform=10_000, n_local=8, local_sigma=0.05, mean="median"))]
#[allow(clippy::too_many_arguments)]
fn bo_minimize<'py>(
    py: Python<'py>,
    objective: Py<PyAny>,
    low: Vec<f64>,
    high: Vec<f64>,
    budget: usize,
    failure_cost: f64,
    kernel: &str,
    model: Option<&PyModel>,
    seed: u64,
    n_uniform: usize,
    n_local: usize,
    local_sigma: f64,
    mean: &str,
) -> PyResult<Bound<'py, PyDict>> {
    if budget == 0 {
        return Err(PyValueError::new_err("budget must be at least 1"));
    }
    let bounds = Bounds::new(low, high).map_err(to_py_err)?;
    let feature = feature_map_for(kernel, model)?;
    let settings = BoSettings {
        n_uniform,
        n_local,
        local_sigma,
        mean: parse_mean(mean)?,
        ..BoSettings::new(budget, seed)
    };

    let mut py_err: Option<PyErr> = None;
    let result = bo_run(
        |p: &[f64]| {
            if py_err.is_some() {
                return Err(gaitbo::Error::Numerical("objective raised".into()));
            }
            let out = objective
                .bind(py)
                .call1((p.to_vec(),))
                .and_then(|v| v.extract::<f64>());
            match out {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(gaitbo::Error::Numerical(format!(
                    "objective returned {v}"
                ))),
                Err(e) => {
                    py_err = Some(e);
                    Err(gaitbo::Error::Numerical("objective raised".into()))
                }
            }
        },
        failure_cost,
        &feature,
        &bounds,
        &settings,
    )
    .map_err(to_py_err)?;
    if let Some(e) = py_err {
        return Err(e);
    }

    let d = PyDict::new(py);
    d.set_item("kernel", result.kernel.clone())?;
    d.set_item("seed", result.seed)?;
    d.set_item(
        "params",
        result
            .trials
            .iter()
            .map(|t| t.params.clone())
            .collect::<Vec<_>>(),
    )?;
    d.set_item(
        "costs",
        result.trials.iter().map(|t| t.cost).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "best_so_far",
        result
            .trials
            .iter()
            .map(|t| t.best_so_far)
            .collect::<Vec<_>>(),
    )?;
    let best = result
        .trials
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("budget >= 1 so the trace is nonempty");
    d.set_item("best_params", best.params.clone())?;
    d.set_item("best_cost", result.best())?;
    Ok(d)
}

/// Evaluate a Sobol grid of controllers and return the dataset columns.
///
/// With `path=` the dataset is also written as the CSV the CLI consumes.
/// `scores` is `None` when every grid point fell (no walking mean to score
/// against).
#[pyfunction]
#[pyo3(signature = (config, family, low, high, cost, n, *, perturb_seed=None, ground_seed=None, ground_extent=16.0, path=None))]
#[allow(clippy::too_many_arguments)]
fn generate_dataset<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    family: &str,
    low: Vec<f64>,
    high: Vec<f64>,
    cost: &PyCost,
    n: usize,
    perturb_seed: Option<u64>,
    ground_seed: Option<u64>,
    ground_extent: f64,
    path: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let fam = parse_family(family)?;
    let bounds = Bounds::new(low, high).map_err(to_py_err)?;
    let perturb = perturb_from(perturb_seed);
    let ground = ground_from(ground_seed, ground_extent);
    let ds = generate_dataset_rs(&config.inner, fam, &bounds, &cost.inner, n, &perturb, &ground)
        .map_err(to_py_err)?;
    if let Some(p) = &path {
        std::fs::write(p, ds.to_csv()).map_err(|e| {
            PyIOError::new_err(format!("writing {}: {e}", p.display()))
        })?;
    }
    let d = PyDict::new(py);
    d.set_item(
        "params",
        ds.records.iter().map(|r| r.params.clone()).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "summaries",
        ds.records.iter().map(|r| r.vector8().to_vec()).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "costs",
        ds.records.iter().map(|r| r.cost).collect::<Vec<_>>(),
    )?;
    let scores: Option<Vec<f64>> = ds
        .records
        .iter()
        .map(|r| r.score)
        .collect::<Option<Vec<_>>>();
    d.set_item("scores", scores)?;
    d.set_item("c_walk", ds.c_walk)?;
    d.set_item("walking_fraction", ds.walking_fraction())?;
    Ok(d)
}

/// Greedy EI argmax over explicit candidate features given an existing GP.
#[pyfunction]
fn acquire_best(gp: &PyGp, candidates: Vec<Vec<f64>>, best: f64) -> PyResult<usize> {
    if candidates.is_empty() {
        return Err(PyValueError::new_err("candidate list is empty"));
    }
    Ok(acquire_next_features(&gp.inner, &candidates, best))
}

#[pymodule]
fn gaitbo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimConfig>()?;
    m.add_class::<PyCost>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyGp>()?;
    m.add_function(wrap_pyfunction!(rollout, m)?)?;
    m.add_function(wrap_pyfunction!(perturbation, m)?)?;
    m.add_function(wrap_pyfunction!(ground_profile, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_grid, m)?)?;
    m.add_function(wrap_pyfunction!(score_transform, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(fit_hyperparams, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement_py, m)?)?;
    m.add_function(wrap_pyfunction!(bo_minimize, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(acquire_best, m)?)?;
    Ok(())
}
