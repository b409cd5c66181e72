//! Sparse-to-dense deformation with a linear displacement model.
//!
//! Dense displacements `D = S_expr - S_neutral` are flattened to `3N`
//! vectors, a PCA basis is trained on them, and a target landmark
//! displacement `d` is explained by coefficients `c` that minimize
//! `|B_L c + mean_L - d|^2 + ridge |c|^2`, where `B_L` holds the basis rows of
//! the landmark vertices. The fitted field `B c + mean` is added to the
//! neutral mesh.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::trajectory::{distance, LandmarkFrame, LandmarkSequence};

/// Fixed connectivity shared by every mesh of a dataset, plus the vertex
/// indices that act as landmarks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshTopology {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    landmark_indices: Vec<usize>,
}

impl MeshTopology {
    pub fn new(
        vertex_count: usize,
        faces: Vec<[usize; 3]>,
        landmark_indices: Vec<usize>,
    ) -> Result<Self> {
        if let Some((f, face)) = faces
            .iter()
            .enumerate()
            .find(|(_, face)| face.iter().any(|&i| i >= vertex_count))
        {
            return Err(Error::invalid(format!(
                "face {f} {face:?} references a vertex beyond {vertex_count}"
            )));
        }
        let topo = Self {
            vertex_count,
            faces,
            landmark_indices: Vec::new(),
        };
        topo.with_landmarks(landmark_indices)
    }

    /// Same connectivity with a new landmark index list.
    pub fn with_landmarks(&self, landmark_indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.vertex_count];
        for &i in &landmark_indices {
            if i >= self.vertex_count {
                return Err(Error::invalid(format!(
                    "landmark index {i} out of range for {} vertices",
                    self.vertex_count
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("duplicate landmark index {i}")));
            }
        }
        Ok(Self {
            vertex_count: self.vertex_count,
            faces: self.faces.clone(),
            landmark_indices,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn landmark_indices(&self) -> &[usize] {
        &self.landmark_indices
    }

    pub fn landmark_count(&self) -> usize {
        self.landmark_indices.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 3]>,
    topology: Arc<MeshTopology>,
}

impl Mesh {
    pub fn new(vertices: Vec<[f64; 3]>, topology: Arc<MeshTopology>) -> Result<Self> {
        if vertices.len() != topology.vertex_count() {
            return Err(Error::shape(format!(
                "{} vertices for a topology of {}",
                vertices.len(),
                topology.vertex_count()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("mesh has non-finite coordinates"));
        }
        Ok(Self { vertices, topology })
    }

    pub fn with_landmarks(self, landmark_indices: Vec<usize>) -> Result<Self> {
        let topology = Arc::new(self.topology.with_landmarks(landmark_indices)?);
        Ok(Self {
            vertices: self.vertices,
            topology,
        })
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn topology(&self) -> &Arc<MeshTopology> {
        &self.topology
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn translated(&self, t: [f64; 3]) -> Mesh {
        Mesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + t[0], v[1] + t[1], v[2] + t[2]])
                .collect(),
            topology: self.topology.clone(),
        }
    }

    /// Errors unless `other` has the same connectivity and landmarks.
    pub fn check_same_topology(&self, other: &Mesh) -> Result<()> {
        if Arc::ptr_eq(&self.topology, &other.topology) || self.topology == other.topology {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "topology mismatch: {} vertices / {} faces vs {} vertices / {} faces",
                self.topology.vertex_count(),
                self.topology.faces().len(),
                other.topology.vertex_count(),
                other.topology.faces().len()
            )))
        }
    }

    pub fn displaced(&self, field: &DisplacementField) -> Result<Mesh> {
        if field.len() != self.vertex_count() {
            return Err(Error::shape(format!(
                "{} displacements for {} vertices",
                field.len(),
                self.vertex_count()
            )));
        }
        Mesh::new(
            self.vertices
                .iter()
                .zip(&field.values)
                .map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
                .collect(),
            self.topology.clone(),
        )
    }
}

/// Per-vertex 3D displacement of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub values: Vec<[f64; 3]>,
}

impl DisplacementField {
    pub fn between(from: &Mesh, to: &Mesh) -> Result<Self> {
        from.check_same_topology(to)?;
        Ok(Self {
            values: difference(&to.vertices, &from.vertices),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat(&self) -> DVector<f64> {
        DVector::from_iterator(3 * self.len(), self.values.iter().flatten().copied())
    }

    fn from_flat(v: &DVector<f64>) -> Self {
        Self {
            values: v.as_slice().chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }
}

/// Displacement of the `k` landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDisplacement {
    pub values: Vec<[f64; 3]>,
}

impl SparseDisplacement {
    pub fn between(from: &LandmarkFrame, to: &LandmarkFrame) -> Result<Self> {
        if from.k() != to.k() {
            return Err(Error::shape("landmark counts differ"));
        }
        Ok(Self {
            values: difference(to.points(), from.points()),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat(&self) -> DVector<f64> {
        DVector::from_iterator(3 * self.len(), self.values.iter().flatten().copied())
    }
}

fn difference(a: &[[f64; 3]], b: &[[f64; 3]]) -> Vec<[f64; 3]> {
    a.iter()
        .zip(b)
        .map(|(p, q)| [p[0] - q[0], p[1] - q[1], p[2] - q[2]])
        .collect()
}

/// Per-vertex weights in `(0, 1]` favoring vertices near landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexWeights {
    pub weights: Vec<f64>,
}

impl VertexWeights {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// How many principal modes to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeSelection {
    Count(usize),
    /// Smallest count whose cumulative explained variance reaches the ratio.
    VarianceRatio(f64),
}

/// Linear model `D = basis * c + mean` over flattened `3N` displacements.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationModel {
    basis: DMatrix<f64>,
    mean: DVector<f64>,
    landmark_indices: Vec<usize>,
    landmark_rows: DMatrix<f64>,
    landmark_mean: DVector<f64>,
    explained_variance: Vec<f64>,
}

impl DeformationModel {
    /// Assembles a model, deriving the landmark rows from `basis`.
    pub fn new(
        basis: DMatrix<f64>,
        mean: DVector<f64>,
        landmark_indices: Vec<usize>,
    ) -> Result<Self> {
        if !basis.nrows().is_multiple_of(3) || basis.nrows() != mean.len() {
            return Err(Error::shape(format!(
                "basis has {} rows, mean has {}; both must be 3N",
                basis.nrows(),
                mean.len()
            )));
        }
        if basis.ncols() == 0 {
            return Err(Error::invalid("model needs at least one mode"));
        }
        if basis.iter().chain(mean.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("model has non-finite entries"));
        }
        let n = basis.nrows() / 3;
        MeshTopology::new(n, Vec::new(), landmark_indices.clone())?;
        let rows: Vec<usize> = landmark_indices
            .iter()
            .flat_map(|&i| [3 * i, 3 * i + 1, 3 * i + 2])
            .collect();
        let landmark_rows = basis.select_rows(rows.iter());
        let landmark_mean = mean.select_rows(rows.iter());
        Ok(Self {
            basis,
            mean,
            landmark_indices,
            landmark_rows,
            landmark_mean,
            explained_variance: Vec::new(),
        })
    }

    /// Like [`DeformationModel::new`], additionally verifying stored landmark
    /// rows against the basis.
    pub fn from_parts(
        basis: DMatrix<f64>,
        mean: DVector<f64>,
        landmark_indices: Vec<usize>,
        landmark_rows: &DMatrix<f64>,
    ) -> Result<Self> {
        let model = Self::new(basis, mean, landmark_indices)?;
        if landmark_rows.shape() != model.landmark_rows.shape() {
            return Err(Error::shape(format!(
                "stored landmark rows are {:?}, expected {:?}",
                landmark_rows.shape(),
                model.landmark_rows.shape()
            )));
        }
        let tol = 1e-12 * model.landmark_rows.amax().max(1.0);
        if (landmark_rows - &model.landmark_rows).amax() > tol {
            return Err(Error::invalid(
                "stored landmark rows disagree with the basis rows at the landmark indices",
            ));
        }
        Ok(model)
    }

    pub fn with_explained_variance(mut self, ratios: Vec<f64>) -> Self {
        self.explained_variance = ratios;
        self
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn landmark_rows(&self) -> &DMatrix<f64> {
        &self.landmark_rows
    }

    pub fn landmark_mean(&self) -> &DVector<f64> {
        &self.landmark_mean
    }

    pub fn landmark_indices(&self) -> &[usize] {
        &self.landmark_indices
    }

    /// Fraction of training variance carried by each kept mode.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn vertex_count(&self) -> usize {
        self.basis.nrows() / 3
    }

    pub fn landmark_count(&self) -> usize {
        self.landmark_indices.len()
    }

    pub fn mode_count(&self) -> usize {
        self.basis.ncols()
    }

    /// `1e-8 * trace(B_L^T B_L) / m`.
    pub fn default_ridge(&self) -> f64 {
        1e-8 * self.landmark_rows.norm_squared() / self.mode_count() as f64
    }

    /// Dense field `basis * c + mean`.
    pub fn displacement(&self, coefficients: &[f64]) -> Result<DisplacementField> {
        if coefficients.len() != self.mode_count() {
            return Err(Error::shape(format!(
                "{} coefficients for a {}-mode model",
                coefficients.len(),
                self.mode_count()
            )));
        }
        let c = DVector::from_column_slice(coefficients);
        Ok(DisplacementField::from_flat(&(&self.basis * c + &self.mean)))
    }
}

pub fn extract_landmarks(mesh: &Mesh) -> Result<LandmarkFrame> {
    let indices = mesh.topology.landmark_indices();
    if indices.is_empty() {
        return Err(Error::invalid("mesh topology has no landmark indices"));
    }
    LandmarkFrame::new(indices.iter().map(|&i| mesh.vertices[i]).collect())
}

/// Turns (neutral, expressive) pairs into dense and landmark displacements.
pub fn build_displacement_dataset(
    pairs: &[(Mesh, Mesh)],
) -> Result<Vec<(DisplacementField, SparseDisplacement)>> {
    let Some((reference, _)) = pairs.first() else {
        return Ok(Vec::new());
    };
    pairs
        .iter()
        .enumerate()
        .map(|(i, (neutral, expressive))| {
            reference
                .check_same_topology(neutral)
                .and_then(|_| neutral.check_same_topology(expressive))
                .map_err(|e| Error::shape(format!("pair {i}: {e}")))?;
            let dense = DisplacementField::between(neutral, expressive)?;
            let sparse = SparseDisplacement {
                values: neutral
                    .topology
                    .landmark_indices()
                    .iter()
                    .map(|&j| dense.values[j])
                    .collect(),
            };
            Ok((dense, sparse))
        })
        .collect()
}

/// Principal component model of dense displacements.
///
/// The basis columns are the leading left singular vectors of the centered
/// `3N x n` data matrix, each signed so its largest-magnitude entry is
/// positive.
pub fn train_pca(
    fields: &[DisplacementField],
    landmark_indices: &[usize],
    modes: ModeSelection,
) -> Result<DeformationModel> {
    let n = fields.len();
    if n == 0 {
        return Err(Error::invalid("no training displacements"));
    }
    let dim = 3 * fields[0].len();
    if dim == 0 {
        return Err(Error::invalid("training displacements are empty"));
    }
    if let Some(i) = fields.iter().position(|f| 3 * f.len() != dim) {
        return Err(Error::shape(format!(
            "sample {i} has {} vertices, sample 0 has {}",
            fields[i].len(),
            dim / 3
        )));
    }
    let max_modes = n.min(dim);
    if let ModeSelection::Count(m) = modes {
        if m == 0 || m > max_modes {
            return Err(Error::invalid(format!(
                "cannot keep {m} modes from {n} samples of dimension {dim}"
            )));
        }
    }

    let mut data = DMatrix::zeros(dim, n);
    for (j, f) in fields.iter().enumerate() {
        data.set_column(j, &f.flat());
    }
    let mean = data.column_mean();
    for mut col in data.column_iter_mut() {
        col -= &mean;
    }

    let (u, sigma) = principal_directions(&data);

    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let ratios: Vec<f64> = sigma
        .iter()
        .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
        .collect();

    let m = match modes {
        ModeSelection::Count(m) => m,
        ModeSelection::VarianceRatio(target) => {
            if !(target > 0.0 && target <= 1.0) {
                return Err(Error::invalid(format!(
                    "variance target must lie in (0, 1], got {target}"
                )));
            }
            let mut acc = 0.0;
            ratios
                .iter()
                .position(|r| {
                    acc += r;
                    acc >= target - 1e-12
                })
                .map_or(ratios.len(), |i| i + 1)
                .min(max_modes)
        }
    };

    let mut basis = DMatrix::zeros(dim, m);
    for col in 0..m {
        let mut v = u.column(col).clone_owned();
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        basis.set_column(col, &v);
    }
    Ok(DeformationModel::new(basis, mean, landmark_indices.to_vec())?
        .with_explained_variance(ratios[..m].to_vec()))
}

/// Left singular vectors and singular values of `x`, in descending order.
///
/// Computed from the eigendecomposition of the smaller Gram matrix. Directions
/// with zero variance are completed to an orthonormal set.
fn principal_directions(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let (dim, n) = x.shape();
    let k = dim.min(n);
    let eig = if n <= dim {
        (x.transpose() * x).symmetric_eigen()
    } else {
        (x * x.transpose()).symmetric_eigen()
    };
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = 1e-24 * top;

    let mut u = DMatrix::zeros(dim, k);
    let mut sigma = vec![0.0; k];
    let mut filled = 0;
    for &i in order.iter().take(k) {
        let lambda = eig.eigenvalues[i];
        if !(lambda > cutoff) {
            break;
        }
        let s = lambda.sqrt();
        let col = if n <= dim {
            (x * eig.eigenvectors.column(i)) / s
        } else {
            eig.eigenvectors.column(i).clone_owned()
        };
        u.set_column(filled, &col);
        sigma[filled] = s;
        filled += 1;
    }
    // zero-variance directions: Gram-Schmidt on coordinate axes
    let mut axis = 0;
    while filled < k && axis < dim {
        let mut v = DVector::zeros(dim);
        v[axis] = 1.0;
        axis += 1;
        for _ in 0..2 {
            for j in 0..filled {
                let c = u.column(j).dot(&v);
                v -= c * u.column(j);
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            u.set_column(filled, &(v / norm));
            filled += 1;
        }
    }
    (u, sigma)
}

/// Relative singular-value cutoff for treating the landmark system as singular.
const RANK_TOLERANCE: f64 = 1e-12;

/// Ridge least-squares coefficients explaining a landmark displacement.
///
/// Solved through the SVD of the landmark rows: `c = V diag(s / (s^2 + ridge)) U^T r`
/// with `r = d - mean_L`.
pub fn fit_coefficients(
    model: &DeformationModel,
    target: &SparseDisplacement,
    ridge: f64,
) -> Result<Vec<f64>> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    if target.len() != model.landmark_count() {
        return Err(Error::shape(format!(
            "{} landmark displacements for a model with {} landmarks",
            target.len(),
            model.landmark_count()
        )));
    }
    let m = model.mode_count();
    let residual = target.flat() - &model.landmark_mean;
    let svd = model.landmark_rows.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let s_max = s.amax();
    let cutoff = RANK_TOLERANCE * s_max;

    if ridge == 0.0 {
        let rank = s.iter().filter(|&&x| x > cutoff).count();
        if rank < m || s_max == 0.0 {
            return Err(Error::SingularSystem { rank, modes: m });
        }
    }

    let projected = u.transpose() * residual;
    let scaled = DVector::from_iterator(
        s.len(),
        s.iter().zip(projected.iter()).map(|(&si, &pi)| {
            if ridge == 0.0 {
                pi / si
            } else {
                pi * si / (si * si + ridge)
            }
        }),
    );
    let c = v_t.transpose() * scaled;
    Ok(c.iter().copied().collect())
}

/// Adds the model's dense field for `c` to `neutral`.
pub fn apply_deformation(
    model: &DeformationModel,
    coefficients: &[f64],
    neutral: &Mesh,
) -> Result<(Mesh, DisplacementField)> {
    if neutral.vertex_count() != model.vertex_count() {
        return Err(Error::shape(format!(
            "mesh has {} vertices, model has {}",
            neutral.vertex_count(),
            model.vertex_count()
        )));
    }
    let field = model.displacement(coefficients)?;
    Ok((neutral.displaced(&field)?, field))
}

/// Inverse distance to the nearest landmark, rescaled into `(0, 1]`.
///
/// Landmark vertices, and any vertex coincident with a landmark, get the
/// largest finite weight before rescaling, so they end up at exactly 1.
pub fn compute_vertex_weights(neutral: &Mesh) -> Result<VertexWeights> {
    let landmarks = extract_landmarks(neutral)?;
    let mut is_landmark = vec![false; neutral.vertex_count()];
    for &i in neutral.topology.landmark_indices() {
        is_landmark[i] = true;
    }
    let raw: Vec<Option<f64>> = neutral
        .vertices
        .par_iter()
        .zip(is_landmark.par_iter())
        .map(|(p, &lm)| {
            if lm {
                return None;
            }
            let d = landmarks
                .points()
                .iter()
                .map(|z| distance(p, z))
                .fold(f64::INFINITY, f64::min);
            (d > 0.0).then(|| 1.0 / d)
        })
        .collect();
    let max = raw.iter().flatten().copied().fold(0.0, f64::max);
    let weights = raw
        .into_iter()
        .map(|w| match w {
            Some(w) if max > 0.0 => (w / max).min(1.0),
            _ => 1.0,
        })
        .collect();
    Ok(VertexWeights { weights })
}

/// Deforms `neutral` so its landmarks follow `target`.
pub fn deform_to_landmarks(
    neutral: &Mesh,
    target: &LandmarkFrame,
    model: &DeformationModel,
    ridge: f64,
) -> Result<Mesh> {
    let d = SparseDisplacement::between(&extract_landmarks(neutral)?, target)?;
    let c = fit_coefficients(model, &d, ridge)?;
    Ok(apply_deformation(model, &c, neutral)?.0)
}

/// Deforms `neutral` through every frame of a landmark sequence.
///
/// Frame 0 is taken as the neutral landmark configuration; frame `t` is driven
/// by `lms[t] - lms[0]`.
pub fn deform_sequence(
    neutral: &Mesh,
    lms: &LandmarkSequence,
    model: &DeformationModel,
    ridge: f64,
) -> Result<Vec<Mesh>> {
    if lms.k() != model.landmark_count() {
        return Err(Error::shape(format!(
            "sequence has {} landmarks, model has {}",
            lms.k(),
            model.landmark_count()
        )));
    }
    let first = lms.first();
    lms.frames()
        .par_iter()
        .map(|frame| {
            let d = SparseDisplacement::between(first, frame)?;
            let c = fit_coefficients(model, &d, ridge)?;
            Ok(apply_deformation(model, &c, neutral)?.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(n: usize, landmarks: Vec<usize>) -> Arc<MeshTopology> {
        Arc::new(MeshTopology::new(n, vec![[0, 1, 2]], landmarks).unwrap())
    }

    fn line_mesh(n: usize, landmarks: Vec<usize>) -> Mesh {
        Mesh::new(
            (0..n).map(|i| [i as f64, 0.0, 0.0]).collect(),
            topo(n, landmarks),
        )
        .unwrap()
    }

    #[test]
    fn topology_validation() {
        assert!(MeshTopology::new(3, vec![[0, 1, 3]], vec![]).is_err());
        assert!(MeshTopology::new(3, vec![[0, 1, 2]], vec![1, 1]).is_err());
        assert!(MeshTopology::new(3, vec![[0, 1, 2]], vec![5]).is_err());
        assert!(Mesh::new(vec![[0.0; 3]; 2], topo(3, vec![])).is_err());
    }

    #[test]
    fn extract_is_row_gather_and_translates() {
        let m = line_mesh(6, vec![4, 1]);
        let z = extract_landmarks(&m).unwrap();
        assert_eq!(z.points(), &[[4.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let zt = extract_landmarks(&m.translated([0.5, 1.0, -2.0])).unwrap();
        assert_eq!(zt, z.translated([0.5, 1.0, -2.0]));
    }

    #[test]
    fn dataset_single_vertex_shift() {
        let n = line_mesh(5, vec![0, 2]);
        let mut v = n.vertices().to_vec();
        v[3][2] += 1.0;
        let e = Mesh::new(v, n.topology().clone()).unwrap();
        let data = build_displacement_dataset(&[(n.clone(), n.clone()), (n.clone(), e)]).unwrap();
        assert!(data[0].0.values.iter().flatten().all(|c| *c == 0.0));
        let nonzero: Vec<usize> = data[1]
            .0
            .values
            .iter()
            .enumerate()
            .filter(|(_, d)| d.iter().any(|c| *c != 0.0))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero, vec![3]);
        assert!(data[1].1.values.iter().flatten().all(|c| *c == 0.0));
    }

    #[test]
    fn dataset_rejects_topology_mismatch() {
        let a = line_mesh(5, vec![0]);
        let b = line_mesh(6, vec![0]);
        assert!(build_displacement_dataset(&[(a, b)]).is_err());
    }

    #[test]
    fn pca_on_rank_one_data() {
        // samples t * u for a fixed direction u over 3 vertices
        let u = [1.0, -2.0, 0.5, 0.0, 3.0, 1.0, -1.0, 0.0, 2.0];
        let fields: Vec<DisplacementField> = [-2.0, -0.5, 1.0, 3.5]
            .iter()
            .map(|t| DisplacementField {
                values: u.chunks(3).map(|c| [t * c[0], t * c[1], t * c[2]]).collect(),
            })
            .collect();
        let model = train_pca(&fields, &[0], ModeSelection::Count(1)).unwrap();
        assert!((model.explained_variance()[0] - 1.0).abs() < 1e-12);
        for f in &fields {
            let x = f.flat() - model.mean();
            let c = model.basis().transpose() * &x;
            let r = x - model.basis() * c;
            assert!(r.amax() < 1e-9);
        }
        assert!(train_pca(&fields, &[0], ModeSelection::Count(5)).is_err());
        let by_var = train_pca(&fields, &[0], ModeSelection::VarianceRatio(0.99)).unwrap();
        assert_eq!(by_var.mode_count(), 1);
    }

    #[test]
    fn fit_centered_target_is_zero() {
        let basis = DMatrix::from_fn(12, 2, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 2.0);
        let mean = DVector::from_fn(12, |i, _| i as f64 * 0.1);
        let model = DeformationModel::new(basis, mean, vec![0, 2, 3]).unwrap();
        let target = SparseDisplacement {
            values: model
                .landmark_mean()
                .as_slice()
                .chunks(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect(),
        };
        let c = fit_coefficients(&model, &target, 0.0).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn fit_detects_singular_systems() {
        // one landmark (3 rows) cannot pin down 4 modes
        let basis = DMatrix::from_fn(9, 4, |i, j| (i * 4 + j) as f64);
        let model = DeformationModel::new(basis, DVector::zeros(9), vec![1]).unwrap();
        let target = SparseDisplacement {
            values: vec![[1.0, 0.0, 0.0]],
        };
        assert!(matches!(
            fit_coefficients(&model, &target, 0.0),
            Err(Error::SingularSystem { .. })
        ));
        assert!(fit_coefficients(&model, &target, model.default_ridge()).is_ok());
        assert!(fit_coefficients(&model, &target, -1.0).is_err());
    }

    #[test]
    fn stored_landmark_rows_are_verified() {
        let basis = DMatrix::from_fn(9, 2, |i, j| (i + 3 * j) as f64);
        let model = DeformationModel::new(basis.clone(), DVector::zeros(9), vec![2]).unwrap();
        let ok = DeformationModel::from_parts(
            basis.clone(),
            DVector::zeros(9),
            vec![2],
            model.landmark_rows(),
        );
        assert!(ok.is_ok());
        let mut bad = model.landmark_rows().clone();
        bad[(0, 0)] += 1.0;
        assert!(DeformationModel::from_parts(basis, DVector::zeros(9), vec![2], &bad).is_err());
    }

    #[test]
    fn weights_follow_inverse_distance() {
        // landmark at x = 0; vertices at 1 and 2 have raw weights 1 and 1/2
        let m = line_mesh(3, vec![0]);
        let w = compute_vertex_weights(&m).unwrap();
        assert_eq!(w.weights[0], 1.0);
        assert!((w.weights[1] / w.weights[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn coincident_vertex_gets_landmark_weight() {
        let t = topo(4, vec![0]);
        let m = Mesh::new(
            vec![[0.0; 3], [0.0; 3], [1.0, 0.0, 0.0], [4.0, 0.0, 0.0]],
            t,
        )
        .unwrap();
        let w = compute_vertex_weights(&m).unwrap();
        assert_eq!(w.weights, vec![1.0, 1.0, 1.0, 0.25]);
    }

    #[test]
    fn apply_keeps_topology() {
        let n = line_mesh(4, vec![0, 3]);
        let basis = DMatrix::from_fn(12, 1, |i, _| if i == 5 { 1.0 } else { 0.0 });
        let model = DeformationModel::new(basis, DVector::zeros(12), vec![0, 3]).unwrap();
        let (out, d) = apply_deformation(&model, &[2.0], &n).unwrap();
        assert!(Arc::ptr_eq(out.topology(), n.topology()));
        assert_eq!(out.vertices()[1], [1.0, 0.0, 2.0]);
        assert_eq!(d.values[1], [0.0, 0.0, 2.0]);
        assert!(apply_deformation(&model, &[1.0, 2.0], &n).is_err());
    }
}
