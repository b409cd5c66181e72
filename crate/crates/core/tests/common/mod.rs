//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;
use std::sync::Arc;

use morph4d::{
    DeformationModel, LandmarkFrame, LandmarkSequence, Mesh, MeshTopology, Srvf, TangentVector,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

pub fn random_frame(rng: &mut impl Rng, k: usize, scale: f64) -> LandmarkFrame {
    LandmarkFrame::new(
        (0..k)
            .map(|_| [0; 3].map(|_| scale * gaussian(rng)))
            .collect(),
    )
    .unwrap()
}

/// Smooth trajectory on `[0, 1]`: per coordinate a linear drift plus three
/// random harmonics.
pub fn smooth_sequence(rng: &mut impl Rng, k: usize, t: usize) -> LandmarkSequence {
    let n = 3 * k;
    let base: Vec<f64> = (0..n).map(|_| 10.0 * gaussian(rng)).collect();
    let drift: Vec<f64> = (0..n).map(|_| 2.0 * gaussian(rng)).collect();
    let harmonics: Vec<[(f64, f64); 3]> = (0..n)
        .map(|_| [0; 3].map(|_| (gaussian(rng), TAU * rng.random::<f64>())))
        .collect();
    let frames = (0..t)
        .map(|i| {
            let s = i as f64 / (t - 1) as f64;
            let flat: Vec<f64> = (0..n)
                .map(|c| {
                    let wave: f64 = harmonics[c]
                        .iter()
                        .enumerate()
                        .map(|(h, (a, ph))| a * (TAU * (h + 1) as f64 * s + ph).sin())
                        .sum();
                    base[c] + drift[c] * s + wave
                })
                .collect();
            LandmarkFrame::from_flat(&flat).unwrap()
        })
        .collect();
    LandmarkSequence::new(frames).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_unit(rng: &mut impl Rng, m: usize, k: usize) -> Srvf {
    let dt = 1.0 / m as f64;
    let x = random_matrix(rng, m, 3 * k);
    let norm = (dt * x.norm_squared()).sqrt();
    Srvf::new(x / norm, dt).unwrap()
}

/// Random tangent vector at `p` with the given norm.
pub fn random_tangent(rng: &mut impl Rng, p: &Srvf, norm: f64) -> TangentVector {
    let (m, n) = p.samples().shape();
    let v = TangentVector::project(random_matrix(rng, m, n), p).unwrap();
    v.scale(norm / v.norm())
}

/// Random model with orthonormal basis columns.
pub fn random_orthonormal_model(
    rng: &mut impl Rng,
    n_vertices: usize,
    k: usize,
    m: usize,
    mean_scale: f64,
) -> DeformationModel {
    let q = random_matrix(rng, 3 * n_vertices, m).qr().q();
    let mean = DVector::from_fn(3 * n_vertices, |_, _| mean_scale * gaussian(rng));
    let indices = random_indices(rng, n_vertices, k);
    DeformationModel::new(q, mean, indices).unwrap()
}

/// `k` distinct indices below `n`.
pub fn random_indices(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    all.truncate(k);
    all
}

pub fn random_mesh(rng: &mut impl Rng, n: usize, landmarks: Vec<usize>) -> Mesh {
    let faces = (0..n.saturating_sub(2)).map(|i| [i, i + 1, i + 2]).collect();
    let topo = Arc::new(MeshTopology::new(n, faces, landmarks).unwrap());
    Mesh::new(
        (0..n).map(|_| [0; 3].map(|_| 50.0 * gaussian(rng))).collect(),
        topo,
    )
    .unwrap()
}

pub fn perturbed(rng: &mut impl Rng, mesh: &Mesh, scale: f64) -> Mesh {
    Mesh::new(
        mesh.vertices()
            .iter()
            .map(|v| [v[0] + scale * gaussian(rng), v[1] + scale * gaussian(rng), v[2] + scale * gaussian(rng)])
            .collect(),
        mesh.topology().clone(),
    )
    .unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
