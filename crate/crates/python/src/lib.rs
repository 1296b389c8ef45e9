//! Python bindings: synthetic corpora, video directories, the temporal
//! detector and the evaluation protocols.

use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use viewspan::detector::{
    detect_video, read_checkpoint, write_checkpoint, DetectorConfig, DetectorParams, TrainConfig,
};
use viewspan::eval::{
    average_precision as ap, run_cross_prompt_protocol, run_train_test_protocol, video_residual, Detector,
    ResidualBaseline, SpannDetector, TrainScope,
};
use viewspan::geometry::{estimate_focal as focal, PointMap};
use viewspan::io::{write_video, FormatError, Label, VideoData, VideoEntry};
use viewspan::synth::{make_corpus, Corpus, CorpusConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn format_err(e: FormatError) -> PyErr {
    match e.root() {
        FormatError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn parse_label(s: &str) -> PyResult<Label> {
    match s {
        "real" => Ok(Label::Real),
        "fake" => Ok(Label::Fake),
        other => Err(PyValueError::new_err(format!("label must be 'real' or 'fake', got '{other}'"))),
    }
}

/// Frames plus the pair records linking consecutive frames.
#[pyclass(name = "Video", module = "viewspan_py", frozen)]
struct PyVideo {
    inner: VideoData,
}

#[pymethods]
impl PyVideo {
    /// Reads a directory of `frame_*.frm` and `pair_*.pmap` files.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = VideoEntry::from_dir(&path).and_then(|e| e.load()).map_err(format_err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_video(&path, &self.inner).map_err(format_err)
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.frames[0].dims()
    }

    /// Row-major RGB intensities of frame `t` as a flat list.
    fn frame(&self, t: usize) -> PyResult<Vec<f64>> {
        self.inner.frames.get(t).map(|f| f.data().to_vec()).ok_or_else(|| value_err(format!("no frame {t}")))
    }

    /// Mean confidence-weighted reprojection residual over all pairs.
    fn residual(&self) -> PyResult<f64> {
        video_residual(&self.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let (h, w) = self.shape();
        format!("Video(frames={}, height={h}, width={w})", self.frame_count())
    }
}

/// Labeled synthetic corpus with a stratified train/test split.
#[pyclass(name = "Corpus", module = "viewspan_py", frozen)]
struct PyCorpus {
    inner: Corpus,
}

impl PyCorpus {
    fn row(&self, id: &str) -> PyResult<&viewspan::io::ManifestRow> {
        self.inner.manifest.get(id).ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }
}

#[pymethods]
impl PyCorpus {
    #[new]
    #[pyo3(signature = (n_real=80, n_fake=80, seed=7))]
    fn new(py: Python<'_>, n_real: usize, n_fake: usize, seed: u64) -> PyResult<Self> {
        let inner = py.detach(|| make_corpus(n_real, n_fake, &CorpusConfig::standard(), seed)).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn ids(&self) -> Vec<String> {
        self.inner.manifest.rows.iter().map(|r| r.id.clone()).collect()
    }

    fn video(&self, id: &str) -> PyResult<PyVideo> {
        let seq = self.inner.sequences.get(id).ok_or_else(|| PyKeyError::new_err(id.to_string()))?;
        Ok(PyVideo { inner: seq.to_video() })
    }

    /// Manifest fields of one sequence.
    fn info<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyDict>> {
        let row = self.row(id)?;
        let d = PyDict::new(py);
        d.set_item("label", row.label.as_str())?;
        d.set_item("generator", &row.generator)?;
        d.set_item("prompt_modality", row.prompt_modality.as_str())?;
        d.set_item("split", row.split.as_str())?;
        Ok(d)
    }

    fn manifest_csv(&self) -> String {
        self.inner.manifest.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.manifest.len()
    }
}

/// Parameters of the memory-augmented temporal detector.
#[pyclass(name = "Detector", module = "viewspan_py", frozen)]
struct PyDetector {
    params: DetectorParams,
}

#[pymethods]
impl PyDetector {
    /// Untrained parameters with the default architecture.
    #[new]
    #[pyo3(signature = (seed=7))]
    fn new(seed: u64) -> Self {
        Self { params: DetectorParams::init(DetectorConfig::default(), seed).rounded_to_f32() }
    }

    /// Fits on videos labeled `"real"` or `"fake"`; returns the detector and the loss curve.
    #[staticmethod]
    #[pyo3(signature = (videos, labels, lr=3e-3, epochs=150, batch=0, seed=7))]
    fn train(
        py: Python<'_>,
        videos: Vec<PyRef<'_, PyVideo>>,
        labels: Vec<String>,
        lr: f64,
        epochs: usize,
        batch: usize,
        seed: u64,
    ) -> PyResult<(Self, Vec<f64>)> {
        if videos.len() != labels.len() {
            return Err(value_err(format!("{} videos but {} labels", videos.len(), labels.len())));
        }
        let set = videos
            .iter()
            .zip(&labels)
            .map(|(v, l)| Ok((v.inner.clone(), parse_label(l)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let detector = SpannDetector { train: TrainConfig { lr, epochs, batch, seed }, ..Default::default() };
        let fitted = py.detach(|| detector.fit_params(&set)).map_err(value_err)?;
        Ok((Self { params: fitted.params }, fitted.loss_curve))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        Ok(Self { params: read_checkpoint(&bytes).map_err(format_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let bytes = write_checkpoint(&self.params).map_err(format_err)?;
        std::fs::write(&path, bytes).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))
    }

    /// Per-pair scores, their mean and the resulting label.
    #[pyo3(signature = (video, threshold=0.5))]
    fn detect<'py>(&self, py: Python<'py>, video: &PyVideo, threshold: f64) -> PyResult<Bound<'py, PyDict>> {
        let trace = py.detach(|| detect_video(&video.inner, &self.params, threshold)).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("frame_scores", trace.frame_scores)?;
        d.set_item("video_score", trace.video_score)?;
        d.set_item("label", trace.label.as_str())?;
        Ok(d)
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.params.parameter_count()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.params == other.params
    }
}

fn pick_detector(name: &str, seed: u64) -> PyResult<Box<dyn Detector + Send + Sync>> {
    match name {
        "spann" => Ok(Box::new(SpannDetector {
            train: TrainConfig { seed, ..Default::default() },
            ..Default::default()
        })),
        "residual" => Ok(Box::new(ResidualBaseline)),
        other => Err(value_err(format!("detector must be 'spann' or 'residual', got '{other}'"))),
    }
}

/// Train-test protocol on a corpus. Returns the report as text plus headline metrics.
#[pyfunction]
#[pyo3(signature = (corpus, detector="spann", train_family=None, seed=7))]
fn train_test<'py>(
    py: Python<'py>,
    corpus: &PyCorpus,
    detector: &str,
    train_family: Option<String>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let det = pick_detector(detector, seed)?;
    let scope = train_family.map_or(TrainScope::AllGenerators, TrainScope::Generator);
    let c = &corpus.inner;
    let report = py
        .detach(|| run_train_test_protocol(&c.manifest, c, det.as_ref(), &scope, seed))
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("text", report.to_text())?;
    d.set_item("video_accuracy", report.video_accuracy)?;
    d.set_item("average_precision", report.average_precision)?;
    d.set_item("f1", report.f1)?;
    d.set_item("weighted_average", report.weighted_average)?;
    d.set_item("uniform_average", report.uniform_average)?;
    let per: Vec<(String, f64)> = report.per_generator.iter().map(|g| (g.generator.clone(), g.accuracy)).collect();
    d.set_item("per_generator", per)?;
    Ok(d)
}

/// Cross-prompt protocol: a 3x4 accuracy matrix with rows T2V, I2V, V2V.
#[pyfunction]
#[pyo3(signature = (corpus, detector="spann", seed=7))]
fn cross_prompt(py: Python<'_>, corpus: &PyCorpus, detector: &str, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let det = pick_detector(detector, seed)?;
    let c = &corpus.inner;
    let report = py.detach(|| run_cross_prompt_protocol(&c.manifest, c, det.as_ref(), seed)).map_err(value_err)?;
    Ok(report.matrix.iter().map(|r| r.to_vec()).collect())
}

/// Step-wise average precision with `labels[i]` true for fakes.
#[pyfunction]
fn average_precision(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    ap(&scores, &labels).map_err(value_err)
}

/// Centered square-pixel focal length of a row-major `height x width` point map.
#[pyfunction]
fn estimate_focal(points: Vec<[f64; 3]>, height: usize, width: usize) -> PyResult<f64> {
    let pm = PointMap::new(height, width, points).map_err(value_err)?;
    Ok(focal(&pm).map_err(value_err)?.fx)
}

#[pymodule]
fn viewspan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVideo>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyDetector>()?;
    m.add_function(wrap_pyfunction!(train_test, m)?)?;
    m.add_function(wrap_pyfunction!(cross_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_focal, m)?)?;
    Ok(())
}
