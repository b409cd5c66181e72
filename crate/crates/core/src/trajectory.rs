//! Landmark frames and sequences: the trajectory `t -> Z(t)` in `R^{k x 3}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One configuration of `k` 3D landmarks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LandmarkFrame {
    points: Vec<[f64; 3]>,
}

impl LandmarkFrame {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("landmark frame needs at least one point"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("landmark frame has non-finite coordinates"));
        }
        Ok(Self { points })
    }

    /// Builds a frame from a flat `x0 y0 z0 x1 y1 z1 ...` slice.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::shape(format!(
                "flat landmark vector length {} is not a multiple of 3",
                flat.len()
            )));
        }
        Self::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().flatten().copied()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.flat().collect()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.k() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for a in 0..3 {
                c[a] += p[a];
            }
        }
        c.map(|v| v / n)
    }

    pub fn translated(&self, offset: [f64; 3]) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p.map(|c| c * s)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.flat().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Largest absolute coordinate difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.flat()
            .zip(other.flat())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Mean over landmarks of the Euclidean distance to the matching landmark of `other`.
    pub fn mean_landmark_distance(&self, other: &Self) -> f64 {
        let total: f64 = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| distance(a, b))
            .sum();
        total / self.k() as f64
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// `T >= 2` frames of equal `k`, sampled every `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSequence {
    frames: Vec<LandmarkFrame>,
    dt: f64,
}

impl LandmarkSequence {
    /// Uses `dt = 1/(T-1)` so the parameter domain is `[0, 1]`.
    pub fn new(frames: Vec<LandmarkFrame>) -> Result<Self> {
        let dt = if frames.len() >= 2 {
            1.0 / (frames.len() - 1) as f64
        } else {
            1.0
        };
        Self::with_dt(frames, dt)
    }

    pub fn with_dt(frames: Vec<LandmarkFrame>, dt: f64) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::SequenceTooShort {
                min: 2,
                got: frames.len(),
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample spacing must be positive, got {dt}")));
        }
        let k = frames[0].k();
        if let Some(i) = frames.iter().position(|f| f.k() != k) {
            return Err(Error::shape(format!(
                "frame {i} has {} landmarks, frame 0 has {k}",
                frames[i].k()
            )));
        }
        Ok(Self { frames, dt })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<LandmarkFrame> {
        self.frames
    }

    pub fn first(&self) -> &LandmarkFrame {
        &self.frames[0]
    }

    pub fn last(&self) -> &LandmarkFrame {
        self.frames.last().expect("sequence is never empty")
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k(&self) -> usize {
        self.frames[0].k()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn translated(&self, offset: [f64; 3]) -> Self {
        Self {
            frames: self.frames.iter().map(|f| f.translated(offset)).collect(),
            dt: self.dt,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            frames: self.frames.iter().map(|f| f.scaled(s)).collect(),
            dt: self.dt,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Centers every frame on its centroid, then scales the whole sequence by a
/// single factor so that the first centered frame has unit Frobenius norm.
pub fn center_normalize(seq: &LandmarkSequence) -> Result<LandmarkSequence> {
    let centered: Vec<LandmarkFrame> = seq
        .frames
        .iter()
        .map(|f| {
            let c = f.centroid();
            f.translated([-c[0], -c[1], -c[2]])
        })
        .collect();
    for (i, f) in centered.iter().enumerate() {
        if f.frobenius_norm() == 0.0 {
            return Err(Error::DegenerateFrame { frame: i });
        }
    }
    let s = 1.0 / centered[0].frobenius_norm();
    Ok(LandmarkSequence {
        frames: centered.iter().map(|f| f.scaled(s)).collect(),
        dt: seq.dt,
    })
}
