//! Python bindings for morph4d.
//!
//! Sequences, SRVFs, motions, meshes and deformation models are wrapped as
//! immutable classes; geometry, synthesis and metric operations are plain
//! functions.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use morph4d::io;
use morph4d::sphere::{KARCHER_MAX_ITER, KARCHER_TOL};
use morph4d::transition::DEFAULT_STEPS;
use morph4d::{
    DeformationModel, LabelSet, LabeledMotion, LandmarkFrame, LandmarkSequence, Mesh,
    ModeSelection, SparseDisplacement, Srvf, TangentVector,
};

fn err(e: morph4d::Error) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

type Points = Vec<[f64; 3]>;

fn frame(points: Points) -> PyResult<LandmarkFrame> {
    LandmarkFrame::new(points).map_err(err)
}

fn labels(names: Option<Vec<String>>) -> PyResult<LabelSet> {
    match names {
        Some(n) => LabelSet::new(&n).map_err(err),
        None => Ok(LabelSet::coma()),
    }
}

/// Landmark trajectory: `T` frames of `k` points.
#[pyclass(name = "LandmarkSequence", frozen)]
struct PySequence(LandmarkSequence);

#[pymethods]
impl PySequence {
    /// Frames as nested lists; `dt` defaults to `1 / (T - 1)`.
    #[new]
    #[pyo3(signature = (frames, dt=None))]
    fn new(frames: Vec<Points>, dt: Option<f64>) -> PyResult<Self> {
        let frames = frames.into_iter().map(frame).collect::<PyResult<Vec<_>>>()?;
        let seq = match dt {
            Some(dt) => LandmarkSequence::with_dt(frames, dt),
            None => LandmarkSequence::new(frames),
        };
        seq.map(Self).map_err(err)
    }

    /// Reads `.json` or `.csv`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_sequence(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_sequence(&self.0, &path).map_err(err)
    }

    fn frames(&self) -> Vec<Points> {
        self.0.frames().iter().map(|f| f.points().to_vec()).collect()
    }

    fn frame(&self, index: usize) -> PyResult<Points> {
        self.0
            .frames()
            .get(index)
            .map(|f| f.points().to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("frame {index} out of range")))
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    fn max_abs_diff(&self, other: &PySequence) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("LandmarkSequence(T={}, k={}, dt={})", self.0.len(), self.0.k(), self.0.dt())
    }
}

/// Square-root velocity encoding of a trajectory.
#[pyclass(name = "Srvf", frozen)]
struct PySrvf(Srvf);

#[pymethods]
impl PySrvf {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_srvf(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_srvf(&self.0, &path).map_err(err)
    }

    fn samples(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    /// Curve length removed by the normalization.
    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn __repr__(&self) -> String {
        format!("Srvf(M={}, k={}, length={})", self.0.sample_count(), self.0.k(), self.0.length())
    }
}

/// Tangent vector at a point of the SRVF sphere.
#[pyclass(name = "TangentVector", frozen)]
struct PyTangent(TangentVector);

#[pymethods]
impl PyTangent {
    fn samples(&self) -> Vec<Vec<f64>> {
        self.0.samples().row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Motion labelled with start and end expressions.
#[pyclass(name = "Motion", frozen)]
struct PyMotion(LabeledMotion);

#[pymethods]
impl PyMotion {
    /// Encodes `sequence`; label names resolve against `labels` (the CoMA
    /// set when omitted).
    #[new]
    #[pyo3(signature = (sequence, start, end, labels=None))]
    fn new(sequence: &PySequence, start: &str, end: &str, labels: Option<Vec<String>>) -> PyResult<Self> {
        let set = self::labels(labels)?;
        let get = |n: &str| set.get(n).cloned().map_err(err);
        LabeledMotion::from_sequence(&sequence.0, get(start)?, get(end)?)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, labels=None))]
    fn load_all(path: PathBuf, labels: Option<Vec<String>>) -> PyResult<Vec<PyMotion>> {
        let set = self::labels(labels)?;
        Ok(io::read_motions(&path, &set).map_err(err)?.into_iter().map(Self).collect())
    }

    #[staticmethod]
    fn save_all(motions: Vec<PyRef<'_, PyMotion>>, path: PathBuf) -> PyResult<()> {
        let ms: Vec<LabeledMotion> = motions.iter().map(|m| m.0.clone()).collect();
        io::write_motions(&ms, &path).map_err(err)
    }

    #[getter]
    fn start(&self) -> String {
        self.0.start.name.clone()
    }

    #[getter]
    fn end(&self) -> String {
        self.0.end.name.clone()
    }

    #[getter]
    fn srvf(&self) -> PySrvf {
        PySrvf(self.0.motion.clone())
    }

    fn decode(&self) -> PyResult<PySequence> {
        self.0.decode().map(PySequence).map_err(err)
    }
}

/// Triangle mesh with optional landmark vertex indices.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh(Mesh);

#[pymethods]
impl PyMesh {
    /// Reads an OBJ file, optionally attaching landmark vertex indices.
    #[staticmethod]
    #[pyo3(signature = (path, landmarks=None))]
    fn load(path: PathBuf, landmarks: Option<Vec<usize>>) -> PyResult<Self> {
        let mesh = io::load_mesh(&path).map_err(err)?;
        match landmarks {
            Some(l) => mesh.with_landmarks(l).map(Self).map_err(err),
            None => Ok(Self(mesh)),
        }
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_mesh(&self.0, &path).map_err(err)
    }

    fn with_landmarks(&self, landmarks: Vec<usize>) -> PyResult<Self> {
        self.0.clone().with_landmarks(landmarks).map(Self).map_err(err)
    }

    fn vertices(&self) -> Points {
        self.0.vertices().to_vec()
    }

    fn faces(&self) -> Vec<[usize; 3]> {
        self.0.topology().faces().to_vec()
    }

    fn landmark_indices(&self) -> Vec<usize> {
        self.0.topology().landmark_indices().to_vec()
    }

    /// Positions of the landmark vertices.
    fn landmarks(&self) -> PyResult<Points> {
        Ok(morph4d::extract_landmarks(&self.0).map_err(err)?.points().to_vec())
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(N={}, faces={}, landmarks={})",
            self.0.vertex_count(),
            self.0.topology().faces().len(),
            self.0.topology().landmark_indices().len()
        )
    }
}

/// Linear displacement model driven by landmark displacements.
#[pyclass(name = "DeformationModel", frozen)]
struct PyModel(DeformationModel);

#[pymethods]
impl PyModel {
    /// PCA of neutral-to-expression displacements. `modes` is a mode count
    /// (int) or an explained-variance target (float in (0, 1]).
    #[staticmethod]
    fn train(
        py: Python<'_>,
        pairs: Vec<(PyRef<'_, PyMesh>, PyRef<'_, PyMesh>)>,
        landmarks: Vec<usize>,
        modes: &Bound<'_, PyAny>,
    ) -> PyResult<Self> {
        let selection = if let Ok(m) = modes.extract::<usize>() {
            ModeSelection::Count(m)
        } else {
            ModeSelection::VarianceRatio(modes.extract::<f64>()?)
        };
        let pairs: Vec<(Mesh, Mesh)> = pairs.iter().map(|(a, b)| (a.0.clone(), b.0.clone())).collect();
        py.detach(|| {
            let data = morph4d::build_displacement_dataset(&pairs)?;
            let fields: Vec<_> = data.into_iter().map(|(d, _)| d).collect();
            morph4d::train_pca(&fields, &landmarks, selection)
        })
        .map(Self)
        .map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::read_model(&path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_model(&self.0, &path).map_err(err)
    }

    #[getter]
    fn mode_count(&self) -> usize {
        self.0.mode_count()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    fn landmark_indices(&self) -> Vec<usize> {
        self.0.landmark_indices().to_vec()
    }

    fn explained_variance(&self) -> Vec<f64> {
        self.0.explained_variance().to_vec()
    }

    fn default_ridge(&self) -> f64 {
        self.0.default_ridge()
    }

    /// Coefficients explaining per-landmark displacements.
    #[pyo3(signature = (displacements, ridge=None))]
    fn fit(&self, displacements: Points, ridge: Option<f64>) -> PyResult<Vec<f64>> {
        let d = SparseDisplacement { values: displacements };
        morph4d::fit_coefficients(&self.0, &d, ridge.unwrap_or_else(|| self.0.default_ridge())).map_err(err)
    }

    /// Dense displacement field for coefficients `c`.
    fn displacement(&self, c: Vec<f64>) -> PyResult<Points> {
        Ok(self.0.displacement(&c).map_err(err)?.values)
    }

    /// `neutral` deformed so its landmarks follow `target`.
    #[pyo3(signature = (neutral, target, ridge=None))]
    fn deform(&self, neutral: &PyMesh, target: Points, ridge: Option<f64>) -> PyResult<PyMesh> {
        let ridge = ridge.unwrap_or_else(|| self.0.default_ridge());
        morph4d::deform_to_landmarks(&neutral.0, &frame(target)?, &self.0, ridge)
            .map(PyMesh)
            .map_err(err)
    }

    /// One mesh per frame; frame `t` is driven by `seq[t] - seq[0]`.
    #[pyo3(signature = (neutral, sequence, ridge=None))]
    fn deform_sequence(
        &self,
        py: Python<'_>,
        neutral: &PyMesh,
        sequence: &PySequence,
        ridge: Option<f64>,
    ) -> PyResult<Vec<PyMesh>> {
        let ridge = ridge.unwrap_or_else(|| self.0.default_ridge());
        let meshes = py
            .detach(|| morph4d::deform_sequence(&neutral.0, &sequence.0, &self.0, ridge))
            .map_err(err)?;
        Ok(meshes.into_iter().map(PyMesh).collect())
    }
}

#[pyfunction]
fn srvf_encode(sequence: &PySequence) -> PyResult<PySrvf> {
    morph4d::srvf_encode(&sequence.0).map(PySrvf).map_err(err)
}

/// Integrates `q` from `init`; `restore` re-applies the stored curve length.
#[pyfunction]
#[pyo3(signature = (q, init, restore=true))]
fn srvf_decode(q: &PySrvf, init: Points, restore: bool) -> PyResult<PySequence> {
    let init = frame(init)?;
    let seq = if restore {
        morph4d::srvf_decode_restored(&q.0, &init)
    } else {
        morph4d::srvf_decode(&q.0, &init)
    };
    seq.map(PySequence).map_err(err)
}

#[pyfunction]
fn geodesic_distance(q1: &PySrvf, q2: &PySrvf) -> PyResult<f64> {
    morph4d::geodesic_distance(&q1.0, &q2.0).map_err(err)
}

#[pyfunction]
fn geodesic_interpolate(q1: &PySrvf, q2: &PySrvf, tau: f64) -> PyResult<PySrvf> {
    morph4d::geodesic_interpolate(&q1.0, &q2.0, tau).map(PySrvf).map_err(err)
}

#[pyfunction]
fn log_map(p: &PySrvf, q: &PySrvf) -> PyResult<PyTangent> {
    morph4d::log_map(&p.0, &q.0).map(PyTangent).map_err(err)
}

#[pyfunction]
fn exp_map(p: &PySrvf, v: &PyTangent) -> PyResult<PySrvf> {
    morph4d::exp_map(&p.0, &v.0).map(PySrvf).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (qs, tol=KARCHER_TOL, max_iter=KARCHER_MAX_ITER))]
fn karcher_mean(qs: Vec<PyRef<'_, PySrvf>>, tol: f64, max_iter: usize) -> PyResult<PySrvf> {
    let qs: Vec<Srvf> = qs.iter().map(|q| q.0.clone()).collect();
    morph4d::karcher_mean(&qs, tol, max_iter).map(PySrvf).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m1, m2, n_steps=DEFAULT_STEPS))]
fn synth_peak_transition(py: Python<'_>, m1: &PyMotion, m2: &PyMotion, n_steps: usize) -> PyResult<PySequence> {
    py.detach(|| morph4d::synth_peak_transition(&m1.0, &m2.0, n_steps))
        .map(|t| PySequence(t.sequence))
        .map_err(err)
}

#[pyfunction]
fn compose_transitions(motions: Vec<PyRef<'_, PyMotion>>, init: Points) -> PyResult<PySequence> {
    let ms: Vec<LabeledMotion> = motions.iter().map(|m| m.0.clone()).collect();
    morph4d::compose_transitions(&ms, &frame(init)?).map(PySequence).map_err(err)
}

#[pyfunction]
fn transfer_motion(source: &PySequence, init: Points) -> PyResult<PySequence> {
    morph4d::transfer_motion(&source.0, &frame(init)?).map(PySequence).map_err(err)
}

#[pyfunction]
fn compute_vertex_weights(mesh: &PyMesh) -> PyResult<Vec<f64>> {
    Ok(morph4d::compute_vertex_weights(&mesh.0).map_err(err)?.weights)
}

/// `(mean, std)` of per-vertex distances.
#[pyfunction]
fn per_vertex_error(a: &PyMesh, b: &PyMesh) -> PyResult<(f64, f64)> {
    let s = morph4d::per_vertex_error(&a.0, &b.0).map_err(err)?;
    Ok((s.mean, s.std))
}

/// `(mean, std)` over generated samples.
#[pyfunction]
fn specificity(generated: Vec<PyRef<'_, PySequence>>, reference: &PySequence) -> PyResult<(f64, f64)> {
    let gens: Vec<LandmarkSequence> = generated.iter().map(|g| g.0.clone()).collect();
    let s = morph4d::specificity(&gens, &reference.0).map_err(err)?;
    Ok((s.mean, s.std))
}

/// `(mean, std)` over generated frames.
#[pyfunction]
fn sliding_window_error(generated: Vec<PyRef<'_, PyMesh>>, truth: Vec<PyRef<'_, PyMesh>>, window: usize) -> PyResult<(f64, f64)> {
    let g: Vec<Mesh> = generated.iter().map(|m| m.0.clone()).collect();
    let t: Vec<Mesh> = truth.iter().map(|m| m.0.clone()).collect();
    let s = morph4d::sliding_window_error(&g, &t, window).map_err(err)?;
    Ok((s.mean, s.std))
}

#[pymodule]
fn morph4d_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequence>()?;
    m.add_class::<PySrvf>()?;
    m.add_class::<PyTangent>()?;
    m.add_class::<PyMotion>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(srvf_encode, m)?)?;
    m.add_function(wrap_pyfunction!(srvf_decode, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_distance, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(log_map, m)?)?;
    m.add_function(wrap_pyfunction!(exp_map, m)?)?;
    m.add_function(wrap_pyfunction!(karcher_mean, m)?)?;
    m.add_function(wrap_pyfunction!(synth_peak_transition, m)?)?;
    m.add_function(wrap_pyfunction!(compose_transitions, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_motion, m)?)?;
    m.add_function(wrap_pyfunction!(compute_vertex_weights, m)?)?;
    m.add_function(wrap_pyfunction!(per_vertex_error, m)?)?;
    m.add_function(wrap_pyfunction!(specificity, m)?)?;
    m.add_function(wrap_pyfunction!(sliding_window_error, m)?)?;
    Ok(())
}
