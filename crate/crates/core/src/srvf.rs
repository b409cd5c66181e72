//! Square-root velocity encoding of landmark trajectories.
//!
//! A sequence of `T` frames is differentiated with forward differences into
//! `M = T - 1` velocity samples `v_i`, each mapped to `q_i = v_i / sqrt(|v_i|)`
//! (zero when `v_i = 0`). Decoding integrates `|q_i| q_i` with an explicit
//! cumulative sum, which is the exact discrete inverse of the encoder.
//!
//! The discrete inner product is `<a, b> = dt * sum_ij a_ij b_ij`, so
//! `|q|^2` equals the polygonal length of the curve. The encoder divides `q`
//! by its norm and keeps the removed length so that decoding can restore the
//! original scale.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::trajectory::{LandmarkFrame, LandmarkSequence};

/// A discretized square-root velocity field: `M` rows of `3k` flattened
/// velocity samples, with the curve length removed during normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct Srvf {
    samples: DMatrix<f64>,
    dt: f64,
    length: f64,
}

impl Srvf {
    pub fn new(samples: DMatrix<f64>, dt: f64) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 || !samples.ncols().is_multiple_of(3) {
            return Err(Error::shape(format!(
                "srvf samples must be M x 3k with M, k >= 1, got {} x {}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample spacing must be positive, got {dt}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("srvf has non-finite samples"));
        }
        Ok(Self {
            samples,
            dt,
            length: 1.0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], dt: f64) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::shape("srvf rows have different lengths"));
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| rows[i][j]), dt)
    }

    /// Attaches the curve length that decoding at original scale re-applies.
    pub fn with_length(mut self, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("curve length must be positive, got {length}")));
        }
        self.length = length;
        Ok(self)
    }

    /// Reuses the shape and spacing of `self` for new samples.
    pub(crate) fn like(&self, samples: DMatrix<f64>, length: f64) -> Self {
        debug_assert_eq!(samples.shape(), self.samples.shape());
        Self {
            samples,
            dt: self.dt,
            length,
        }
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of velocity samples `M`.
    pub fn sample_count(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of landmarks `k`.
    pub fn k(&self) -> usize {
        self.samples.ncols() / 3
    }

    pub(crate) fn check_compatible(&self, other: &Srvf) -> Result<()> {
        check_field_compatible(
            self.samples.shape(),
            self.dt,
            other.samples.shape(),
            other.dt,
        )
    }

    /// Discrete L2 inner product `dt * sum(a .* b)`.
    pub fn inner(&self, other: &Srvf) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.dt * self.samples.dot(&other.samples))
    }

    pub fn norm_sq(&self) -> f64 {
        self.dt * self.samples.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    pub fn neg(&self) -> Srvf {
        self.like(-&self.samples, self.length)
    }

    pub fn max_abs_diff(&self, other: &Srvf) -> f64 {
        self.samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_field_compatible(
    a: (usize, usize),
    dt_a: f64,
    b: (usize, usize),
    dt_b: f64,
) -> Result<()> {
    if a != b {
        return Err(Error::shape(format!(
            "{} x {} field vs {} x {} field",
            a.0, a.1, b.0, b.1
        )));
    }
    if (dt_a - dt_b).abs() > 1e-12 * dt_a.abs().max(dt_b.abs()) {
        return Err(Error::shape(format!("sample spacing {dt_a} vs {dt_b}")));
    }
    Ok(())
}

/// Encodes a trajectory as a unit-norm SRVF. The removed scale is kept as
/// [`Srvf::length`].
pub fn srvf_encode(seq: &LandmarkSequence) -> Result<Srvf> {
    let frames = seq.frames();
    if frames.len() < 2 {
        return Err(Error::SequenceTooShort {
            min: 2,
            got: frames.len(),
        });
    }
    let dt = seq.dt();
    let width = 3 * seq.k();
    let mut samples = DMatrix::zeros(frames.len() - 1, width);
    for (i, pair) in frames.windows(2).enumerate() {
        let mut row: Vec<f64> = pair[1]
            .flat()
            .zip(pair[0].flat())
            .map(|(b, a)| (b - a) / dt)
            .collect();
        let speed = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if speed > 0.0 {
            let s = speed.sqrt();
            row.iter_mut().for_each(|v| *v /= s);
            for (j, v) in row.into_iter().enumerate() {
                samples[(i, j)] = v;
            }
        }
    }
    let length = dt * samples.norm_squared();
    if length == 0.0 {
        return Err(Error::ZeroMotion);
    }
    samples /= length.sqrt();
    Srvf::new(samples, dt)?.with_length(length)
}

/// Integrates `q` from `init`: `a_{i+1} = a_i + dt |q_i| q_i`.
///
/// A unit-norm `q` decodes to a curve of length 1.
pub fn srvf_decode(q: &Srvf, init: &LandmarkFrame) -> Result<LandmarkSequence> {
    integrate(q, init, 1.0)
}

/// Like [`srvf_decode`], but scales the motion back by [`Srvf::length`].
pub fn srvf_decode_restored(q: &Srvf, init: &LandmarkFrame) -> Result<LandmarkSequence> {
    integrate(q, init, q.length())
}

fn integrate(q: &Srvf, init: &LandmarkFrame, scale: f64) -> Result<LandmarkSequence> {
    if init.k() != q.k() {
        return Err(Error::shape(format!(
            "srvf has {} landmarks, initial frame has {}",
            q.k(),
            init.k()
        )));
    }
    let mut frames = Vec::with_capacity(q.sample_count() + 1);
    let mut current = init.to_flat();
    frames.push(init.clone());
    for row in q.samples().row_iter() {
        let step = q.dt() * scale * row.norm();
        for (c, v) in current.iter_mut().zip(row.iter()) {
            *c += step * v;
        }
        frames.push(LandmarkFrame::from_flat(&current)?);
    }
    LandmarkSequence::with_dt(frames, q.dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(points: &[[f64; 3]]) -> LandmarkSequence {
        LandmarkSequence::new(
            points
                .iter()
                .map(|p| LandmarkFrame::new(vec![*p]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_sequence_is_zero_motion() {
        let s = seq(&[[1.0, 2.0, 3.0]; 4]);
        assert!(matches!(srvf_encode(&s), Err(Error::ZeroMotion)));
    }

    #[test]
    fn uniform_linear_motion_by_hand() {
        // k = 1, T = 3, x(t) = 2t over [0, 1]: dt = 1/2, v = (2,0,0),
        // q = v / sqrt(2) = (sqrt2, 0, 0), |q|^2 = dt * 2 * 2 = 2 (length 2),
        // normalized q = (1, 0, 0).
        let s = seq(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let q = srvf_encode(&s).unwrap();
        assert_eq!(q.sample_count(), 2);
        assert!((q.length() - 2.0).abs() < 1e-15);
        for i in 0..2 {
            assert!((q.samples()[(i, 0)] - 1.0).abs() < 1e-15);
            assert_eq!(q.samples()[(i, 1)], 0.0);
        }
        assert!((q.norm_sq() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_interval_maps_to_zero_sample() {
        let s = seq(&[[0.0; 3], [0.0; 3], [1.0, 0.0, 0.0]]);
        let q = srvf_encode(&s).unwrap();
        assert!(q.samples().row(0).iter().all(|v| *v == 0.0));
        let back = srvf_decode_restored(&q, s.first()).unwrap();
        assert!(back.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn zero_srvf_decodes_to_constant() {
        let q = Srvf::new(DMatrix::zeros(4, 6), 0.25).unwrap();
        let init = LandmarkFrame::new(vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let s = srvf_decode(&q, &init).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.frames().iter().all(|f| f == &init));
    }

    #[test]
    fn init_offset_shifts_output() {
        let s = seq(&[[0.0, 0.0, 0.0], [1.0, 0.5, 0.0], [1.5, 2.0, -1.0]]);
        let q = srvf_encode(&s).unwrap();
        let a = srvf_decode(&q, s.first()).unwrap();
        let b = srvf_decode(&q, &s.first().translated([3.0, -1.0, 0.5])).unwrap();
        assert!(a.translated([3.0, -1.0, 0.5]).max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn decode_rejects_dimension_mismatch() {
        let q = Srvf::new(DMatrix::zeros(2, 6), 0.5).unwrap();
        let init = LandmarkFrame::new(vec![[0.0; 3]]).unwrap();
        assert!(matches!(srvf_decode(&q, &init), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn encode_is_translation_invariant() {
        let s = seq(&[[0.0, 0.0, 0.0], [1.0, 0.5, 0.0], [1.5, 2.0, -1.0]]);
        let a = srvf_encode(&s).unwrap();
        let b = srvf_encode(&s.translated([0.5, 0.25, 2.0])).unwrap();
        assert_eq!(a, b);
    }
}
