//! Evaluation metrics for generated meshes and landmark sequences. Distances
//! are in model units (mm for scan data).

use serde::{Deserialize, Serialize};

use crate::deform::{DisplacementField, Mesh, VertexWeights};
use crate::error::{Error, Result};
use crate::trajectory::{distance, LandmarkSequence};

/// Mean and population standard deviation of a set of errors.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSummary {
    pub mean: f64,
    pub std: f64,
    pub values: Option<Vec<f64>>,
}

impl ErrorSummary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("no values to summarize"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt(),
            values: Some(values),
        })
    }

    pub fn without_values(mut self) -> Self {
        self.values = None;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

/// JSON report emitted by the evaluation front end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub mean_mm: f64,
    pub std_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<f64>>,
}

impl MetricReport {
    pub fn new(metric: impl Into<String>, summary: &ErrorSummary) -> Self {
        Self {
            metric: metric.into(),
            mean_mm: summary.mean,
            std_mm: summary.std,
            curve: None,
        }
    }

    pub fn with_curve(mut self, curve: Vec<f64>) -> Self {
        self.curve = Some(curve);
        self
    }
}

/// Per-vertex Euclidean distances between corresponding vertices.
pub fn vertex_distances(a: &Mesh, b: &Mesh) -> Result<Vec<f64>> {
    a.check_same_topology(b)?;
    Ok(a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| distance(p, q))
        .collect())
}

pub fn per_vertex_error(a: &Mesh, b: &Mesh) -> Result<ErrorSummary> {
    ErrorSummary::from_values(vertex_distances(a, b)?)
}

/// Fraction of `errors` at or below each threshold.
pub fn cumulative_error_curve(errors: &[f64], thresholds: &[f64]) -> Result<CumulativeCurve> {
    if errors.is_empty() {
        return Err(Error::invalid("no errors for cumulative curve"));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("thresholds must be ascending"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let fractions = thresholds
        .iter()
        .map(|&t| sorted.partition_point(|&e| e <= t) as f64 / n)
        .collect();
    Ok(CumulativeCurve {
        thresholds: thresholds.to_vec(),
        fractions,
    })
}

fn l1(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs() + (a[2] - b[2]).abs()
}

/// `(1/N) sum_i |Dg_i - Dgt_i|_1`.
pub fn displacement_l1(generated: &DisplacementField, truth: &DisplacementField) -> Result<f64> {
    if generated.len() != truth.len() || generated.is_empty() {
        return Err(Error::shape(format!(
            "displacement fields of {} and {} vertices",
            generated.len(),
            truth.len()
        )));
    }
    let sum: f64 = generated
        .values
        .iter()
        .zip(&truth.values)
        .map(|(a, b)| l1(a, b))
        .sum();
    Ok(sum / generated.len() as f64)
}

/// `(1/N) sum_i w_i |p_i - p'_i|_1`.
pub fn weighted_l1(generated: &Mesh, truth: &Mesh, weights: &VertexWeights) -> Result<f64> {
    generated.check_same_topology(truth)?;
    if weights.len() != generated.vertex_count() {
        return Err(Error::shape(format!(
            "{} weights for {} vertices",
            weights.len(),
            generated.vertex_count()
        )));
    }
    let sum: f64 = generated
        .vertices()
        .iter()
        .zip(truth.vertices())
        .zip(&weights.weights)
        .map(|((a, b), w)| w * l1(a, b))
        .sum();
    Ok(sum / generated.vertex_count() as f64)
}

pub const DEFAULT_BETA1: f64 = 1.0;
pub const DEFAULT_BETA2: f64 = 0.1;

/// `beta1 * l_dr + beta2 * l_pr`.
pub fn s2d_total_loss(l_dr: f64, l_pr: f64, beta1: f64, beta2: f64) -> f64 {
    beta1 * l_dr + beta2 * l_pr
}

fn check_same_shape(generated: &[LandmarkSequence], reference: &LandmarkSequence) -> Result<()> {
    if generated.is_empty() {
        return Err(Error::invalid("no generated sequences"));
    }
    for (i, g) in generated.iter().enumerate() {
        if g.len() != reference.len() || g.k() != reference.k() {
            return Err(Error::shape(format!(
                "generated sequence {i} is {} frames x {} landmarks, reference is {} x {}",
                g.len(),
                g.k(),
                reference.len(),
                reference.k()
            )));
        }
    }
    Ok(())
}

/// Mean landmark distance of each frame of `g` to the same frame of `reference`.
fn frame_distances(g: &LandmarkSequence, reference: &LandmarkSequence) -> Vec<f64> {
    g.frames()
        .iter()
        .zip(reference.frames())
        .map(|(a, b)| a.mean_landmark_distance(b))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per sample, the mean over frames and landmarks of the distance to the
/// reference; summarized over samples.
pub fn specificity(
    generated: &[LandmarkSequence],
    reference: &LandmarkSequence,
) -> Result<ErrorSummary> {
    check_same_shape(generated, reference)?;
    ErrorSummary::from_values(
        generated
            .iter()
            .map(|g| mean(&frame_distances(g, reference)))
            .collect(),
    )
}

/// Specificity against the closest of several references per sample.
pub fn specificity_nearest(
    generated: &[LandmarkSequence],
    references: &[LandmarkSequence],
) -> Result<ErrorSummary> {
    if references.is_empty() {
        return Err(Error::invalid("no reference sequences"));
    }
    for r in references {
        check_same_shape(generated, r)?;
    }
    ErrorSummary::from_values(
        generated
            .iter()
            .map(|g| {
                references
                    .iter()
                    .map(|r| mean(&frame_distances(g, r)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect(),
    )
}

/// Frame-wise distance to the reference averaged over samples and landmarks.
pub fn per_frame_specificity(
    generated: &[LandmarkSequence],
    reference: &LandmarkSequence,
) -> Result<Vec<f64>> {
    check_same_shape(generated, reference)?;
    let mut curve = vec![0.0; reference.len()];
    for g in generated {
        for (c, d) in curve.iter_mut().zip(frame_distances(g, reference)) {
            *c += d;
        }
    }
    let n = generated.len() as f64;
    Ok(curve.into_iter().map(|c| c / n).collect())
}

/// For each generated frame `t`, the smallest mean per-vertex error against
/// ground-truth frames in `[t - window/2, t + window/2]`, clamped to the
/// ground-truth range.
pub fn sliding_window_error(gen: &[Mesh], gt: &[Mesh], window: usize) -> Result<ErrorSummary> {
    if gen.is_empty() || gt.is_empty() {
        return Err(Error::invalid("sliding-window error needs nonempty sequences"));
    }
    let half = window / 2;
    let last = gt.len() - 1;
    let per_frame = gen
        .iter()
        .enumerate()
        .map(|(t, g)| {
            let lo = t.saturating_sub(half).min(last);
            let hi = (t + half).min(last);
            gt[lo..=hi]
                .iter()
                .map(|r| per_vertex_error(g, r).map(|s| s.mean))
                .try_fold(f64::INFINITY, |acc, e| e.map(|e| acc.min(e)))
        })
        .collect::<Result<Vec<_>>>()?;
    ErrorSummary::from_values(per_frame)
}
