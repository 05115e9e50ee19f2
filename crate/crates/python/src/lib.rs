//! Python bindings: `import topohough`.

use pyo3::exceptions::{PyIOError, PyLookupError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use topohough_core as core;
use topohough_core::{KernelKind, KernelSpec, NormalizationMode, Point, SelectionPolicy};

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidArgument(_) | core::Error::Parse { .. } | core::Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        core::Error::NotFound(_) => PyLookupError::new_err(e.to_string()),
        core::Error::Io(_) => PyIOError::new_err(e.to_string()),
        core::Error::GenerationFailure(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn points(raw: Vec<(f64, f64)>) -> Vec<Point> {
    raw.into_iter().map(|(x, y)| Point::new(x, y)).collect()
}

fn kernel(kind: &str, sigma: f64) -> PyResult<KernelSpec> {
    let kind: KernelKind = kind.parse().map_err(to_py)?;
    KernelSpec::new(kind, sigma).map_err(to_py)
}

fn mode(m: &str) -> PyResult<NormalizationMode> {
    m.parse().map_err(to_py)
}

fn selection(top_k: Option<usize>, alpha: Option<f64>) -> PyResult<SelectionPolicy> {
    match (top_k, alpha) {
        (Some(k), None) => Ok(SelectionPolicy::TopK(k)),
        (None, Some(a)) => Ok(SelectionPolicy::Threshold(a)),
        _ => Err(PyValueError::new_err("give exactly one of top_k or alpha")),
    }
}

/// A selected line with its persistence.
#[pyclass(frozen, get_all, skip_from_py_object, module = "topohough")]
#[derive(Clone)]
struct DetectedLine {
    r: f64,
    theta: f64,
    score: f64,
    death: f64,
    persistence: f64,
    cell: usize,
}

#[pymethods]
impl DetectedLine {
    fn __repr__(&self) -> String {
        format!("DetectedLine(r={}, theta={}, persistence={})", self.r, self.theta, self.persistence)
    }
}

impl From<&core::DetectedLine> for DetectedLine {
    fn from(l: &core::DetectedLine) -> Self {
        Self { r: l.r, theta: l.theta, score: l.score, death: l.death, persistence: l.persistence, cell: l.cell }
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "topohough")]
#[derive(Clone)]
struct PersistencePair {
    birth: f64,
    death: f64,
    representative: usize,
}

#[pymethods]
impl PersistencePair {
    #[getter]
    fn persistence(&self) -> f64 {
        self.birth - self.death
    }

    fn __repr__(&self) -> String {
        format!("PersistencePair(birth={}, death={}, representative={})", self.birth, self.death, self.representative)
    }
}

impl From<&core::PersistencePair> for PersistencePair {
    fn from(p: &core::PersistencePair) -> Self {
        Self { birth: p.birth, death: p.death, representative: p.representative }
    }
}

/// Piecewise-constant approximation of the score on the line strip.
#[pyclass(frozen, module = "topohough")]
struct CellField {
    inner: core::CellField,
}

#[pymethods]
impl CellField {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: core::CellField::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn r0(&self) -> f64 {
        self.inner.r0
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    /// Approximate score of a line given in normalized coordinates.
    fn value_at(&self, r: f64, theta: f64) -> f64 {
        self.inner.value_at(core::LineParams::new(r, theta))
    }

    /// Persistence pairs of the field, most persistent first.
    #[pyo3(signature = (twisted = true))]
    fn diagram(&self, twisted: bool) -> PyResult<Vec<PersistencePair>> {
        let (pairs, _) = core::diagram(&self.inner, SelectionPolicy::Threshold(0.0), twisted).map_err(to_py)?;
        Ok(pairs.iter().map(PersistencePair::from).collect())
    }

    /// Persistence diagram as CSV text.
    fn diagram_csv(&self) -> PyResult<String> {
        let (pairs, _) = core::diagram(&self.inner, SelectionPolicy::Threshold(0.0), true).map_err(to_py)?;
        core::io::diagram_csv(&pairs, &self.inner).map_err(to_py)
    }
}

#[pyclass(frozen, get_all, module = "topohough")]
struct Detection {
    lines: Vec<DetectedLine>,
    pairs: Vec<PersistencePair>,
    field: Py<CellField>,
}

/// Canonical form of a line, with theta in [0, pi).
#[pyfunction]
fn canonicalize(r: f64, theta: f64) -> PyResult<(f64, f64)> {
    let lp = core::canonicalize(core::LineParams::new(r, theta)).map_err(to_py)?;
    Ok((lp.r, lp.theta))
}

/// Exact score of a line for raw points.
#[pyfunction]
#[pyo3(signature = (points, r, theta, sigma, kernel_kind = "hat", normalization = "mean"))]
fn score(points: Vec<(f64, f64)>, r: f64, theta: f64, sigma: f64, kernel_kind: &str, normalization: &str) -> PyResult<f64> {
    let k = kernel(kernel_kind, sigma)?;
    let pts = self::points(points);
    if pts.is_empty() {
        return Err(PyValueError::new_err("score needs at least one point"));
    }
    let lp = core::LineParams::new(r, theta);
    let mut total = 0.0;
    for p in &pts {
        total += k.eval(core::point_line_distance(*p, lp)).map_err(to_py)?;
    }
    Ok(match mode(normalization)? {
        NormalizationMode::Mean => total / pts.len() as f64,
        NormalizationMode::Sum => total,
    })
}

/// Runs the detector; `sigma` is in the points' units, `epsilon` in score
/// units of `normalization`.
#[pyfunction]
#[pyo3(signature = (points, sigma, epsilon, top_k = None, alpha = None, kernel_kind = "hat", normalization = "mean"))]
fn detect(
    py: Python<'_>,
    points: Vec<(f64, f64)>,
    sigma: f64,
    epsilon: f64,
    top_k: Option<usize>,
    alpha: Option<f64>,
    kernel_kind: &str,
    normalization: &str,
) -> PyResult<Detection> {
    let cfg = core::DetectConfig::new(kernel(kernel_kind, sigma)?, epsilon, selection(top_k, alpha)?)
        .with_mode(mode(normalization)?);
    let pts = self::points(points);
    let found = py.detach(|| core::detect(&pts, &cfg)).map_err(to_py)?;
    Ok(Detection {
        lines: found.lines.iter().map(DetectedLine::from).collect(),
        pairs: found.pairs.iter().map(PersistencePair::from).collect(),
        field: Py::new(py, CellField { inner: found.field })?,
    })
}

/// 0-dimensional persistence of a vertex-weighted graph.
#[pyfunction]
fn compute_persistence(values: Vec<f64>, edges: Vec<(usize, usize)>) -> PyResult<Vec<PersistencePair>> {
    let g = core::NerveGraph::from_edges(values, edges).map_err(to_py)?;
    Ok(core::compute_persistence(&g).iter().map(PersistencePair::from).collect())
}

/// Random scene: returns `(points, truth)` with truth as `(r, theta)`.
#[pyfunction]
#[pyo3(signature = (counts, noise, seed, extent = 32.0, index = 0))]
fn generate_scene(
    counts: Vec<usize>,
    noise: f64,
    seed: u64,
    extent: f64,
    index: u64,
) -> PyResult<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let s = core::scene::random_scene(&counts, noise, extent, seed, index).map_err(to_py)?;
    Ok((s.points.iter().map(|p| (p.x, p.y)).collect(), s.truth.iter().map(|t| (t.params.r, t.params.theta)).collect()))
}

/// Gap between the k-th and (k+1)-th largest vote counts of the voting
/// baseline.
#[pyfunction]
#[pyo3(signature = (points, k, r_max, r_bins = None, theta_bins = 180))]
fn vote_gap(points: Vec<(f64, f64)>, k: usize, r_max: f64, r_bins: Option<usize>, theta_bins: usize) -> PyResult<u32> {
    let bins = r_bins.unwrap_or_else(|| core::baseline::default_r_bins(r_max, 1));
    let acc = core::baseline::accumulate(&self::points(points), bins, theta_bins, r_max).map_err(to_py)?;
    core::baseline::vote_gap(&acc, k).map_err(to_py)
}

/// Optimal matching of detected to true lines; one
/// `(truth, detected, euclidean_err, abs_dr, abs_dtheta)` per true line.
#[pyfunction]
fn match_lines(
    detected: Vec<(f64, f64)>,
    truth: Vec<(f64, f64)>,
    r_max: f64,
) -> PyResult<Vec<(usize, usize, f64, f64, f64)>> {
    let conv = |v: Vec<(f64, f64)>| v.into_iter().map(|(r, t)| core::LineParams::new(r, t)).collect::<Vec<_>>();
    let rep = core::experiments::match_lines(&conv(detected), &conv(truth), r_max).map_err(to_py)?;
    Ok(rep.pairs.iter().map(|p| (p.truth, p.detected, p.euclidean_err, p.abs_dr, p.abs_dtheta)).collect())
}

#[pymodule]
fn topohough(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DetectedLine>()?;
    m.add_class::<PersistencePair>()?;
    m.add_class::<CellField>()?;
    m.add_class::<Detection>()?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(compute_persistence, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scene, m)?)?;
    m.add_function(wrap_pyfunction!(vote_gap, m)?)?;
    m.add_function(wrap_pyfunction!(match_lines, m)?)?;
    Ok(())
}
