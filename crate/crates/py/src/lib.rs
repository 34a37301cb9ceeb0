//! Python bindings: domains and datasets, the MLP, metrics and the experiment
//! harness. Structured results (metric bundles, experiment records) are
//! returned as plain dicts.

use imbdepth::domain::io::{load_dataset, save_dataset};
use imbdepth::harness::{self, ExperimentGrid, Regimen, TrainingSchedule, THRESHOLD};
use imbdepth::metrics::{confusion as confusion_matrix, MetricBundle};
use imbdepth::nn::{self, GRAD_CHECK_STEP};
use imbdepth::{BackboneSpec, Dataset, DomainSpec, GaussianBackboneSpec, MlpModel, OverlapSpec};
use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

fn py_err(e: imbdepth::Error) -> PyErr {
    match e {
        imbdepth::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serialisable value to the matching Python object.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Labels go out as a list of ints; pyo3 would turn `Vec<u8>` into `bytes`.
fn widen(labels: &[u8]) -> Vec<u32> {
    labels.iter().map(|&l| l.into()).collect()
}

fn matrix(rows: Vec<Vec<f64>>, dim: Option<usize>) -> PyResult<Array2<f64>> {
    let cols = dim.or_else(|| rows.first().map(Vec::len)).unwrap_or(0);
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(PyValueError::new_err(format!(
            "row {i} has {} values, expected {cols}",
            rows[i].len()
        )));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A binary-labelled feature matrix; label 1 is the majority class.
#[pyclass(name = "Dataset", module = "imbdepth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Self> {
        let inner = Dataset::new(matrix(features, None)?, labels).map_err(py_err)?;
        Ok(PyDataset { inner })
    }

    #[staticmethod]
    fn load_csv(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            inner: load_dataset(path).map_err(py_err)?,
        })
    }

    fn save_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        save_dataset(&self.inner, path).map_err(py_err)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner
            .features()
            .outer_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        widen(self.inner.labels())
    }

    /// `(majority, minority)` row counts.
    #[getter]
    fn class_counts(&self) -> (usize, usize) {
        let c = self.inner.class_counts();
        (c.majority, c.minority)
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        let n = self.inner.n_rows();
        if let Some(&i) = indices.iter().find(|&&i| i >= n) {
            return Err(PyValueError::new_err(format!(
                "index {i} out of range for {n} rows"
            )));
        }
        Ok(PyDataset {
            inner: self.inner.subset(&indices),
        })
    }

    /// Stratified folds as lists of row indices.
    fn stratified_folds(&self, k: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
        harness::stratified_folds(&self.inner, k, seed).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        let c = self.inner.class_counts();
        format!(
            "Dataset(rows={}, dim={}, majority={}, minority={})",
            self.inner.n_rows(),
            self.inner.dim(),
            c.majority,
            c.minority
        )
    }
}

/// One domain of the backbone, overlap or gaussian-backbone family.
#[pyclass(name = "Domain", module = "imbdepth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDomain {
    inner: DomainSpec,
}

#[pymethods]
impl PyDomain {
    #[staticmethod]
    fn backbone(c: u8, s: u8, b: u8) -> PyResult<Self> {
        let spec = BackboneSpec::new(c, s, b).map_err(py_err)?;
        Ok(PyDomain { inner: spec.into() })
    }

    #[staticmethod]
    #[pyo3(signature = (k, minority_frac, total = imbdepth::domain::OVERLAP_TOTAL))]
    fn overlap(k: u8, minority_frac: f64, total: usize) -> PyResult<Self> {
        let spec = OverlapSpec::with_total(k, minority_frac, total).map_err(py_err)?;
        Ok(PyDomain { inner: spec.into() })
    }

    #[staticmethod]
    fn gaussian_backbone(v: u8, b: u8) -> PyResult<Self> {
        let spec = GaussianBackboneSpec::new(v, b).map_err(py_err)?;
        Ok(PyDomain { inner: spec.into() })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn slug(&self) -> String {
        self.inner.slug()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    /// The training set for `seed`.
    fn generate(&self, py: Python<'_>, seed: u64) -> PyDataset {
        let spec = self.inner;
        PyDataset {
            inner: py.detach(|| spec.generate(seed)),
        }
    }

    /// The family's balanced test set at its default size.
    fn testset(&self, py: Python<'_>, seed: u64) -> PyDataset {
        let spec = self.inner;
        PyDataset {
            inner: py.detach(|| spec.generate_testset(seed)),
        }
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Domain({})", self.inner.slug())
    }
}

/// Architecture and training hyperparameters.
#[pyclass(
    name = "MlpConfig",
    module = "imbdepth",
    get_all,
    set_all,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyMlpConfig {
    input_dim: usize,
    depth: usize,
    hidden_units: usize,
    seed: u64,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
}

impl PyMlpConfig {
    fn to_core(&self) -> PyResult<imbdepth::MlpConfig> {
        let cfg = imbdepth::MlpConfig {
            depth: self.depth,
            hidden_units: self.hidden_units,
            input_dim: self.input_dim,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
        };
        cfg.validate().map_err(py_err)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyMlpConfig {
    #[new]
    #[pyo3(signature = (input_dim, depth, hidden_units, seed, learning_rate = 0.001, epochs = 300, batch_size = 32))]
    fn new(
        input_dim: usize,
        depth: usize,
        hidden_units: usize,
        seed: u64,
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
    ) -> PyResult<Self> {
        let cfg = PyMlpConfig {
            input_dim,
            depth,
            hidden_units,
            seed,
            learning_rate,
            epochs,
            batch_size,
        };
        cfg.to_core()?;
        Ok(cfg)
    }

    fn __repr__(&self) -> String {
        format!(
            "MlpConfig(input_dim={}, depth={}, hidden_units={}, seed={}, learning_rate={}, epochs={}, batch_size={})",
            self.input_dim,
            self.depth,
            self.hidden_units,
            self.seed,
            self.learning_rate,
            self.epochs,
            self.batch_size
        )
    }
}

/// A trained (or freshly initialised) network.
#[pyclass(name = "Mlp", module = "imbdepth", frozen, skip_from_py_object)]
struct PyMlp {
    inner: MlpModel,
}

impl PyMlp {
    fn features(&self, features: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
        matrix(features, Some(self.inner.input_dim()))
    }
}

#[pymethods]
impl PyMlp {
    /// Glorot-uniform weights and zero biases, without training.
    #[staticmethod]
    fn init(config: &PyMlpConfig) -> PyResult<Self> {
        let inner = MlpModel::init(&config.to_core()?).map_err(py_err)?;
        Ok(PyMlp { inner })
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    /// The flat parameter vector: per layer, row-major weights then biases.
    fn params(&self) -> Vec<f64> {
        self.inner.params().to_vec()
    }

    /// Majority-class probabilities.
    fn predict_proba(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = self.features(features)?;
        Ok(self.inner.forward(x.view()).map_err(py_err)?.to_vec())
    }

    #[pyo3(signature = (features, threshold = THRESHOLD))]
    fn predict(&self, features: Vec<Vec<f64>>, threshold: f64) -> PyResult<Vec<u32>> {
        let x = self.features(features)?;
        Ok(widen(
            &self.inner.predict(x.view(), threshold).map_err(py_err)?,
        ))
    }

    /// Mean clamped cross-entropy on `data`.
    fn loss(&self, data: &PyDataset) -> PyResult<f64> {
        self.inner
            .loss(data.inner.features(), data.inner.labels())
            .map_err(py_err)
    }

    /// Metric bundle on `data`. The weighted G-Mean uses `train_counts`
    /// `(majority, minority)` when given, else the class sizes of `data`.
    #[pyo3(signature = (data, train_counts = None))]
    fn evaluate(
        &self,
        py: Python<'_>,
        data: &PyDataset,
        train_counts: Option<(u64, u64)>,
    ) -> PyResult<Py<PyAny>> {
        let pred = self
            .inner
            .predict(data.inner.features(), THRESHOLD)
            .map_err(py_err)?;
        bundle(py, data.inner.labels(), &pred, train_counts)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Mlp(input_dim={}, depth={}, params={})",
            self.inner.input_dim(),
            self.inner.depth(),
            self.inner.n_params()
        )
    }
}

/// Trains a network; returns the model and the per-epoch mean losses.
#[pyfunction]
fn train(py: Python<'_>, config: &PyMlpConfig, data: &PyDataset) -> PyResult<(PyMlp, Vec<f64>)> {
    let cfg = config.to_core()?;
    let ds = data.inner.clone();
    let (model, report) = py.detach(|| nn::train(&cfg, &ds)).map_err(py_err)?;
    Ok((PyMlp { inner: model }, report.epoch_losses))
}

/// Compares backpropagated gradients of `model` on `data` with central
/// differences.
#[pyfunction]
#[pyo3(signature = (model, data, h = GRAD_CHECK_STEP))]
fn check_gradients(py: Python<'_>, model: &PyMlp, data: &PyDataset, h: f64) -> PyResult<Py<PyAny>> {
    let report = nn::check_gradients(&model.inner, data.inner.features(), data.inner.labels(), h)
        .map_err(py_err)?;
    let value = serde_json::json!({
        "max_relative_error": report.max_relative_error,
        "checked": report.checked,
        "skipped_at_kinks": report.skipped_at_kinks,
    });
    to_py(py, &value)
}

fn bundle(
    py: Python<'_>,
    y_true: &[u8],
    y_pred: &[u8],
    train_counts: Option<(u64, u64)>,
) -> PyResult<Py<PyAny>> {
    let cm = confusion_matrix(y_true, y_pred).map_err(py_err)?;
    let (n1, n0) = train_counts.unwrap_or((cm.tp + cm.fn_, cm.tn + cm.fp));
    to_py(py, &MetricBundle::from_confusion(&cm, n1, n0))
}

/// Confusion matrix with class 1 as positive: `{"tp", "fp", "tn", "fn"}`.
#[pyfunction]
fn confusion(py: Python<'_>, y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<Py<PyAny>> {
    let cm = confusion_matrix(&y_true, &y_pred).map_err(py_err)?;
    let value = serde_json::json!({"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn_});
    to_py(py, &value)
}

/// Sensitivities, specificities, G-Means, macro F1 and balanced accuracy.
#[pyfunction]
#[pyo3(signature = (y_true, y_pred, train_counts = None))]
fn metrics(
    py: Python<'_>,
    y_true: Vec<u8>,
    y_pred: Vec<u8>,
    train_counts: Option<(u64, u64)>,
) -> PyResult<Py<PyAny>> {
    bundle(py, &y_true, &y_pred, train_counts)
}

fn schedule(epochs: usize, learning_rate: f64, batch_size: usize) -> TrainingSchedule {
    TrainingSchedule {
        epochs,
        learning_rate,
        batch_size,
    }
}

fn regimen(cv_folds: Option<usize>) -> Regimen {
    match cv_folds {
        Some(k) => Regimen::StratifiedCv { k },
        None => Regimen::BalancedTest,
    }
}

/// Trains one network on the domain's training set and scores it on the
/// balanced test set, or with stratified cross-validation when `cv_folds`
/// is given.
#[pyfunction]
#[pyo3(signature = (domain, depth, hidden_units, seed, cv_folds = None, epochs = 300, learning_rate = 0.001, batch_size = 32))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    domain: &PyDomain,
    depth: usize,
    hidden_units: usize,
    seed: u64,
    cv_folds: Option<usize>,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
) -> PyResult<Py<PyAny>> {
    let spec = domain.inner;
    let cfg = schedule(epochs, learning_rate, batch_size).config(
        spec.input_dim(),
        depth,
        hidden_units,
        harness::seeds::train_stream(seed, harness::seeds::MODEL_STREAM),
    );
    let result = py
        .detach(|| harness::run_regimen(&spec, &cfg, regimen(cv_folds), seed))
        .map_err(py_err)?;
    to_py(py, &result)
}

/// Runs every hidden-unit candidate and keeps the best by mean macro G-Mean.
#[pyfunction]
#[pyo3(signature = (domain, depth, seed, candidates = vec![2, 4, 8, 16], cv_folds = None, epochs = 300, learning_rate = 0.001, batch_size = 32))]
#[allow(clippy::too_many_arguments)]
fn sweep_hidden_units(
    py: Python<'_>,
    domain: &PyDomain,
    depth: usize,
    seed: u64,
    candidates: Vec<usize>,
    cv_folds: Option<usize>,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
) -> PyResult<Py<PyAny>> {
    let spec = domain.inner;
    let sched = schedule(epochs, learning_rate, batch_size);
    let result = py
        .detach(|| {
            harness::sweep_hidden_units(&spec, depth, &candidates, regimen(cv_folds), seed, &sched)
        })
        .map_err(py_err)?;
    to_py(py, &result)
}

/// Runs an experiment grid given as JSON; returns one record per cell, each
/// with a `status` of `ok` or `failed` and its `runtime_secs`.
#[pyfunction]
#[pyo3(signature = (config, jobs = 1))]
fn run_grid(py: Python<'_>, config: &str, jobs: usize) -> PyResult<Py<PyAny>> {
    let grid = ExperimentGrid::from_json(config).map_err(py_err)?;
    let timed = py
        .detach(|| harness::run_grid(&grid, jobs))
        .map_err(py_err)?;
    let mut records = Vec::with_capacity(timed.len());
    for t in &timed {
        let mut record =
            serde_json::to_value(&t.outcome).map_err(|e| PyValueError::new_err(e.to_string()))?;
        if let Value::Object(map) = &mut record {
            map.insert("runtime_secs".into(), t.runtime_secs.into());
        }
        records.push(record);
    }
    to_py(py, &records)
}

#[pymodule]
#[pyo3(name = "imbdepth")]
fn imbdepth_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyDomain>()?;
    m.add_class::<PyMlpConfig>()?;
    m.add_class::<PyMlp>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(check_gradients, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_hidden_units, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    m.add("THRESHOLD", THRESHOLD)?;
    Ok(())
}
