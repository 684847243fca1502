//! Python bindings for fallstream.
//!
//! ```python
//! import fallstream
//! model = fallstream.Model.load("model.json")
//! p, cls = model.classify(window)  # window: 200 (ax, ay, az) tuples
//! ```

use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fallstream::features::{self, FeatureSchema, FeatureVector, SlidingBuffer};
use fallstream::ingest::{self, ColumnMapping, Sample};
use fallstream::model::{self, ModelArtifact};
use fallstream::stream::{Classifier, SinkSpec};
use fallstream::windowing::{Window, WindowConfig};
use fallstream_cli::{ReplayArgs, Split};

fn py_err(e: fallstream::Error) -> PyErr {
    match e {
        fallstream::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn cli_err(e: anyhow::Error) -> PyErr {
    PyValueError::new_err(format!("{e:#}"))
}

fn to_samples(window: &[(f64, f64, f64)]) -> Vec<Sample> {
    window
        .iter()
        .enumerate()
        .map(|(i, &(ax, ay, az))| Sample::new("py", i as i64, ax, ay, az))
        .collect()
}

fn window_config(size: usize, stride: Option<usize>) -> PyResult<WindowConfig> {
    WindowConfig::new(size, stride.unwrap_or(size)).map_err(py_err)
}

/// Names of the 58 window features, in order.
#[pyfunction]
fn feature_names() -> Vec<String> {
    FeatureSchema::v1().names
}

/// The 58 features of one window of (ax, ay, az) samples in m/s².
#[pyfunction]
fn extract_features(window: Vec<(f64, f64, f64)>) -> PyResult<Vec<f64>> {
    features::feature_values(&to_samples(&window), &FeatureSchema::v1()).map_err(py_err)
}

/// SisFall characteristics C2, C3, C8, C9, C13 of a full buffer.
#[pyfunction]
#[pyo3(signature = (samples, dt = 0.005))]
fn sisfall_characteristics<'py>(
    py: Python<'py>,
    samples: Vec<(f64, f64, f64)>,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut buf = SlidingBuffer::new(samples.len(), dt).map_err(py_err)?;
    for (ax, ay, az) in samples {
        buf.push([ax, ay, az]);
    }
    let c = buf.characteristics().map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("c2", c.c2)?;
    d.set_item("c3", c.c3)?;
    d.set_item("c8", c.c8)?;
    d.set_item("c9", c.c9)?;
    d.set_item("c13", c.c13)?;
    Ok(d)
}

/// "FALL" or "ADL" for an activity code.
#[pyfunction]
fn activity_class(code: &str) -> PyResult<String> {
    Ok(ingest::map_activity_to_class(code)
        .map_err(py_err)?
        .to_string())
}

type TrialRow = (i64, f64, f64, f64, Option<String>);

/// Samples of a trial file as (t_ms, ax, ay, az, label) tuples.
#[pyfunction]
#[pyo3(signature = (path, mapping = None))]
fn parse_trial(path: PathBuf, mapping: Option<PathBuf>) -> PyResult<Vec<TrialRow>> {
    let mapping = match mapping {
        Some(p) => ColumnMapping::load(&p).map_err(py_err)?,
        None => ColumnMapping::positional(true),
    };
    let trial = ingest::load_trial(&path, &mapping).map_err(py_err)?;
    Ok(trial
        .samples
        .into_iter()
        .map(|s| (s.t_ms, s.ax, s.ay, s.az, s.label.map(|l| l.code)))
        .collect())
}

/// Per-feature min-max scaler.
#[pyclass(module = "fallstream", frozen, from_py_object)]
#[derive(Clone)]
struct Scaler {
    inner: features::Scaler,
}

#[pymethods]
impl Scaler {
    /// Fits on rows of 58 raw feature values.
    #[staticmethod]
    fn fit(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let rows: Vec<FeatureVector> = rows
            .into_iter()
            .map(|v| FeatureVector::from_values(v, None))
            .collect();
        Ok(Self {
            inner: features::fit_scaler(&rows).map_err(py_err)?,
        })
    }

    fn transform(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.transform(&values).map_err(py_err)
    }

    #[getter]
    fn min(&self) -> Vec<f64> {
        self.inner.min.clone()
    }

    #[getter]
    fn max(&self) -> Vec<f64> {
        self.inner.max.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A trained model artifact: scaler plus network.
#[pyclass(module = "fallstream", frozen)]
struct Model {
    classifier: Classifier,
}

impl Model {
    fn artifact(&self) -> &ModelArtifact {
        self.classifier.artifact()
    }
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let artifact = model::load_artifact(&path).map_err(py_err)?;
        Ok(Self {
            classifier: Classifier::new(Arc::new(artifact)).map_err(py_err)?,
        })
    }

    /// An untrained network with the default layout, scaled by `scaler`.
    #[staticmethod]
    #[pyo3(signature = (scaler, seed = 1))]
    fn untrained(scaler: &Scaler, seed: u64) -> PyResult<Self> {
        let net = model::init_model(&model::DEFAULT_DIMS, seed).map_err(py_err)?;
        let meta =
            model::TrainingMetadata::from_config(&model::TrainConfig::default(), String::new());
        let artifact = ModelArtifact::new(net, scaler.inner.clone(), meta).map_err(py_err)?;
        Ok(Self {
            classifier: Classifier::new(Arc::new(artifact)).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        model::save_artifact(self.artifact(), &path).map_err(py_err)
    }

    /// SHA-256 of the canonical artifact bytes.
    #[getter]
    fn digest(&self) -> String {
        self.classifier.digest().to_owned()
    }

    #[getter]
    fn layer_dims(&self) -> Vec<usize> {
        self.artifact().model.layer_dims.clone()
    }

    #[getter]
    fn scaler(&self) -> Scaler {
        Scaler {
            inner: self.artifact().scaler.clone(),
        }
    }

    /// Fall probability for 58 raw (unscaled) feature values.
    fn predict(&self, raw: Vec<f64>) -> PyResult<f64> {
        self.artifact().predict(&raw).map_err(py_err)
    }

    /// (p_fall, "FALL" | "ADL") for one window of (ax, ay, az) samples.
    fn classify(&self, window: Vec<(f64, f64, f64)>) -> PyResult<(f64, String)> {
        let w = Window::from_samples(to_samples(&window)).map_err(py_err)?;
        let (p, class) = self.classifier.classify(&w).map_err(py_err)?;
        Ok((p, class.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(layer_dims={:?}, digest={})",
            self.layer_dims(),
            &self.digest()[..12]
        )
    }
}

/// Windows a dataset directory into a feature CSV; returns the counts.
#[pyfunction]
#[pyo3(signature = (dataset, out, mapping = None, window_size = 200, stride = None))]
fn prepare<'py>(
    py: Python<'py>,
    dataset: PathBuf,
    out: PathBuf,
    mapping: Option<PathBuf>,
    window_size: usize,
    stride: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mapping = match mapping {
        Some(p) => ColumnMapping::load(&p).map_err(py_err)?,
        None => ColumnMapping::positional(true),
    };
    let window = window_config(window_size, stride)?;
    let r = py
        .detach(|| fallstream_cli::cmd_prepare(&dataset, &mapping, window, &out))
        .map_err(cli_err)?;
    let d = PyDict::new(py);
    d.set_item("trials", r.trials)?;
    d.set_item("windows", r.windows)?;
    d.set_item("samples", r.samples)?;
    d.set_item("malformed", r.malformed)?;
    d.set_item("partial_drops", r.partial_drops)?;
    d.set_item("labels", r.labels.into_iter().collect::<Vec<_>>())?;
    Ok(d)
}

/// Trains on a feature CSV and writes the artifact; returns accuracies.
#[pyfunction]
#[pyo3(signature = (features, out, epochs = 150, seed = 1))]
fn train<'py>(
    py: Python<'py>,
    features: PathBuf,
    out: PathBuf,
    epochs: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = model::TrainConfig {
        epochs,
        init_seed: seed,
        shuffle_seed: seed.wrapping_add(1),
        split_seed: seed.wrapping_add(2),
        ..model::TrainConfig::default()
    };
    let r = py
        .detach(|| fallstream_cli::cmd_train(&features, &config, &out))
        .map_err(cli_err)?;
    let meta = &r.artifact.training;
    let d = PyDict::new(py);
    d.set_item("train_accuracy", meta.train_accuracy)?;
    d.set_item("test_accuracy", meta.test_accuracy)?;
    d.set_item("final_loss", meta.final_loss)?;
    d.set_item("digest", r.digest)?;
    Ok(d)
}

/// Accuracy and confusion matrices of an artifact on a feature CSV.
#[pyfunction]
#[pyo3(signature = (features, artifact, split = "all"))]
fn evaluate<'py>(
    py: Python<'py>,
    features: PathBuf,
    artifact: PathBuf,
    split: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let split = match split {
        "all" => Split::All,
        "train" => Split::Train,
        "test" => Split::Test,
        other => return Err(PyValueError::new_err(format!("unknown split `{other}`"))),
    };
    let m = py
        .detach(|| fallstream_cli::cmd_evaluate(&features, &artifact, split))
        .map_err(cli_err)?;
    let d = PyDict::new(py);
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("counts", m.counts)?;
    d.set_item("normalized", m.normalized)?;
    d.set_item("samples", m.samples)?;
    Ok(d)
}

/// Streams a trial file through the pipeline; returns the run counters.
#[pyfunction]
#[pyo3(signature = (trial, artifact, sinks = vec!["stdout".to_owned()], speed = "max", rate_hz = 20.0, mapping = None))]
fn replay<'py>(
    py: Python<'py>,
    trial: PathBuf,
    artifact: PathBuf,
    sinks: Vec<String>,
    speed: &str,
    rate_hz: f64,
    mapping: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let sinks = sinks
        .iter()
        .map(|s| s.parse::<SinkSpec>())
        .collect::<fallstream::Result<Vec<_>>>()
        .map_err(py_err)?;
    let args = ReplayArgs {
        trial,
        mapping,
        artifact,
        rate_hz,
        speed: speed.parse().map_err(py_err)?,
        sinks,
        window: WindowConfig::default(),
        queue_capacity: fallstream::stream::DEFAULT_QUEUE_CAPACITY,
        overflow: None,
    };
    let s = py
        .detach(|| fallstream_cli::cmd_replay(&args, Arc::new(AtomicBool::new(false))))
        .map_err(cli_err)?;
    let d = PyDict::new(py);
    d.set_item("samples_in", s.samples_in)?;
    d.set_item("malformed", s.malformed)?;
    d.set_item("windows", s.windows_emitted)?;
    d.set_item("partial_drops", s.partial_window_drops)?;
    d.set_item("detections", s.detections)?;
    d.set_item("sink_failures", s.sink_failures)?;
    Ok(d)
}

#[pymodule(name = "fallstream")]
fn fallstream_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FEATURE_COUNT", features::FEATURE_COUNT)?;
    m.add("SCHEMA_VERSION", features::SCHEMA_V1)?;
    m.add_class::<Scaler>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(sisfall_characteristics, m)?)?;
    m.add_function(wrap_pyfunction!(activity_class, m)?)?;
    m.add_function(wrap_pyfunction!(parse_trial, m)?)?;
    m.add_function(wrap_pyfunction!(prepare, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
