//! Loss arithmetic of the manifold-valued conditional WGAN.
//!
//! Discriminator and generator are not part of this crate: callers evaluate
//! them and pass in scores, gradient norms, and generator outputs expressed
//! as tangent vectors at the reference point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{exp_map, log_map, Srvf, TangentVector};
use crate::transition::ExpressionLabel;

pub const NOISE_DIM: usize = 128;

/// Weights of the adversarial loss, the reconstruction loss, and the
/// gradient penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lambda_gp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha2: 10.0,
            lambda_gp: 10.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("lambda_gp", self.lambda_gp),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Generator conditioning: start and end one-hots followed by noise.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCode {
    pub start_onehot: Vec<f64>,
    pub end_onehot: Vec<f64>,
    pub noise: Vec<f64>,
}

impl ConditionCode {
    pub fn label_count(&self) -> usize {
        self.start_onehot.len()
    }

    /// `[start | end | noise]`, length `2L + 128`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.label_count() + self.noise.len());
        v.extend_from_slice(&self.start_onehot);
        v.extend_from_slice(&self.end_onehot);
        v.extend_from_slice(&self.noise);
        v
    }

    pub fn from_flat(flat: &[f64], label_count: usize) -> Result<Self> {
        if flat.len() != 2 * label_count + NOISE_DIM {
            return Err(Error::shape(format!(
                "condition vector has length {}, expected {}",
                flat.len(),
                2 * label_count + NOISE_DIM
            )));
        }
        let code = Self {
            start_onehot: flat[..label_count].to_vec(),
            end_onehot: flat[label_count..2 * label_count].to_vec(),
            noise: flat[2 * label_count..].to_vec(),
        };
        for part in [&code.start_onehot, &code.end_onehot] {
            let ones = part.iter().filter(|&&v| v == 1.0).count();
            let zeros = part.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != part.len() {
                return Err(Error::invalid("label block is not one-hot"));
            }
        }
        Ok(code)
    }
}

fn onehot(label: &ExpressionLabel, label_count: usize) -> Result<Vec<f64>> {
    if label.id >= label_count {
        return Err(Error::invalid(format!(
            "label '{}' (id {}) out of range for {label_count} labels",
            label.name, label.id
        )));
    }
    let mut v = vec![0.0; label_count];
    v[label.id] = 1.0;
    Ok(v)
}

pub fn encode_condition(
    start: &ExpressionLabel,
    end: &ExpressionLabel,
    noise: &[f64],
    label_count: usize,
) -> Result<ConditionCode> {
    if noise.len() != NOISE_DIM {
        return Err(Error::shape(format!(
            "noise has length {}, expected {NOISE_DIM}",
            noise.len()
        )));
    }
    Ok(ConditionCode {
        start_onehot: onehot(start, label_count)?,
        end_onehot: onehot(end, label_count)?,
        noise: noise.to_vec(),
    })
}

/// Gradient-penalty sample `(1 - tau) log_p(q) + tau log_p(exp_p(g))`.
pub fn gp_interpolate(
    q_real: &Srvf,
    g_tangent: &TangentVector,
    tau: f64,
    p: &Srvf,
) -> Result<TangentVector> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    check_basepoint(g_tangent, p)?;
    let real = log_map(p, q_real)?;
    let fake = log_map(p, &exp_map(p, g_tangent)?)?;
    real.combine(1.0 - tau, &fake, tau)
}

fn check_basepoint(v: &TangentVector, p: &Srvf) -> Result<()> {
    if v.basepoint() != p {
        return Err(Error::shape("generator output is not based at the reference point"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `mean(real) - mean(fake) + lambda_gp * mean((|grad| - 1)^2)`.
pub fn adversarial_loss(
    real_scores: &[f64],
    fake_scores: &[f64],
    grad_norms: &[f64],
    weights: &LossWeights,
) -> Result<f64> {
    if real_scores.is_empty() || fake_scores.is_empty() || grad_norms.is_empty() {
        return Err(Error::invalid("adversarial loss needs nonempty score lists"));
    }
    if grad_norms.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::invalid("gradient norms must be >= 0"));
    }
    let penalty = grad_norms.iter().map(|g| (g - 1.0).powi(2)).sum::<f64>() / grad_norms.len() as f64;
    Ok(mean(real_scores) - mean(fake_scores) + weights.lambda_gp * penalty)
}

/// `|log_p(exp_p(g)) - log_p(q_gt)|_1`, summed over all samples.
pub fn reconstruction_loss_tangent(g_tangent: &TangentVector, q_gt: &Srvf, p: &Srvf) -> Result<f64> {
    check_basepoint(g_tangent, p)?;
    let generated = log_map(p, &exp_map(p, g_tangent)?)?;
    let truth = log_map(p, q_gt)?;
    generated.l1_distance(&truth)
}

/// `alpha1 * l_adv + alpha2 * l_r`.
pub fn motion_total_loss(l_adv: f64, l_r: f64, weights: &LossWeights) -> f64 {
    weights.alpha1 * l_adv + weights.alpha2 * l_r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::LabelSet;

    #[test]
    fn neutral_condition_layout() {
        let set = LabelSet::coma();
        let n = set.get("neutral").unwrap();
        let code = encode_condition(n, n, &[0.0; NOISE_DIM], set.len()).unwrap();
        let flat = code.to_flat();
        assert_eq!(flat.len(), 154);
        assert_eq!(flat[0], 1.0);
        assert_eq!(flat[13], 1.0);
        assert_eq!(flat.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn distinct_labels_roundtrip() {
        let set = LabelSet::coma();
        let a = set.get("bareteeth").unwrap();
        let b = set.get("mouth_up").unwrap();
        let noise: Vec<f64> = (0..NOISE_DIM).map(|i| (i as f64 * 0.37).sin()).collect();
        let code = encode_condition(a, b, &noise, 13).unwrap();
        let flat = code.to_flat();
        assert_eq!(flat[..26].iter().filter(|&&v| v == 1.0).count(), 2);
        assert_eq!(ConditionCode::from_flat(&flat, 13).unwrap(), code);
    }

    #[test]
    fn condition_errors() {
        let set = LabelSet::coma();
        let a = set.get("bareteeth").unwrap();
        let bogus = ExpressionLabel {
            id: 20,
            name: "bogus".into(),
        };
        assert!(encode_condition(a, &bogus, &[0.0; NOISE_DIM], 13).is_err());
        assert!(encode_condition(a, a, &[0.0; 3], 13).is_err());
        assert!(ConditionCode::from_flat(&[0.0; 154], 13).is_err());
    }

    #[test]
    fn adversarial_by_hand() {
        let w = LossWeights::default();
        assert_eq!(adversarial_loss(&[1.0, 3.0], &[2.0, 2.0], &[1.0], &w).unwrap(), 0.0);
        assert_eq!(adversarial_loss(&[2.0], &[1.0], &[1.0, 1.0], &w).unwrap(), 1.0);
        // penalty: mean((0 - 1)^2) = 1, times lambda 10
        assert_eq!(adversarial_loss(&[0.5], &[0.5], &[0.0, 0.0], &w).unwrap(), 10.0);
        assert!(adversarial_loss(&[], &[1.0], &[1.0], &w).is_err());
        assert!(adversarial_loss(&[1.0], &[1.0], &[-1.0], &w).is_err());
    }

    #[test]
    fn total_loss_defaults() {
        let w = LossWeights::default();
        assert_eq!(motion_total_loss(0.0, 0.0, &w), 0.0);
        assert_eq!(motion_total_loss(1.0, 1.0, &w), 11.0);
        assert_eq!(motion_total_loss(3.0, 0.5, &w), 8.0);
        assert!(LossWeights { alpha1: -1.0, ..w }.validate().is_err());
    }
}
