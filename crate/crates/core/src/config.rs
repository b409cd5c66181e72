//! Pipeline configuration, loaded from a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::deform::ModeSelection;
use crate::error::{Error, Result};
use crate::io;
use crate::losses::LossWeights;
use crate::metrics::{DEFAULT_BETA1, DEFAULT_BETA2};
use crate::sphere::{DEFAULT_EPSILON, KARCHER_MAX_ITER, KARCHER_TOL};
use crate::transition::{LabelSet, DEFAULT_STEPS};

pub const CONFIG_ENV: &str = "MORPH4D_CONFIG";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaModes {
    Modes(usize),
    Variance(f64),
}

impl From<PcaModes> for ModeSelection {
    fn from(p: PcaModes) -> Self {
        match p {
            PcaModes::Modes(m) => ModeSelection::Count(m),
            PcaModes::Variance(v) => ModeSelection::VarianceRatio(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2dWeights {
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for S2dWeights {
    fn default() -> Self {
        Self {
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// JSON `{ "labels": [...] }`; the CoMA label set when absent.
    pub label_set: Option<PathBuf>,
    /// Landmark vertex indices, one per line.
    pub landmark_indices: Option<PathBuf>,
    pub n_steps: usize,
    pub pca: PcaModes,
    /// Fitting regularization; `None` uses the model's default ridge.
    pub ridge: Option<f64>,
    pub loss_weights: LossWeights,
    pub s2d_weights: S2dWeights,
    pub numeric_epsilon: f64,
    pub karcher_tol: f64,
    pub karcher_max_iter: usize,
    /// Transitions kept per label pair by prototype selection.
    pub top_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            label_set: None,
            landmark_indices: None,
            n_steps: DEFAULT_STEPS,
            pca: PcaModes::Modes(220),
            ridge: None,
            loss_weights: LossWeights::default(),
            s2d_weights: S2dWeights::default(),
            numeric_epsilon: DEFAULT_EPSILON,
            karcher_tol: KARCHER_TOL,
            karcher_max_iter: KARCHER_MAX_ITER,
            top_k: 10,
        }
    }
}

impl PipelineConfig {
    /// Reads and validates a config; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = io::read_json(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut cfg.label_set, &mut cfg.landmark_indices].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Explicit path first, then `$MORPH4D_CONFIG`, then defaults.
    pub fn discover(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.label_set, &self.landmark_indices].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "configured path does not exist"),
                ));
            }
        }
        if self.n_steps < 2 {
            return Err(Error::invalid(format!("n_steps must be >= 2, got {}", self.n_steps)));
        }
        match self.pca {
            PcaModes::Modes(0) => return Err(Error::invalid("pca modes must be >= 1")),
            PcaModes::Variance(v) if !(v > 0.0 && v <= 1.0) => {
                return Err(Error::invalid(format!("pca variance must lie in (0, 1], got {v}")))
            }
            _ => {}
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("ridge must be finite and >= 0, got {r}")));
            }
        }
        self.loss_weights.validate()?;
        let b = self.s2d_weights;
        if !(b.beta1 >= 0.0 && b.beta2 >= 0.0) {
            return Err(Error::invalid("s2d weights must be >= 0"));
        }
        if !(self.numeric_epsilon > 0.0 && self.karcher_tol > 0.0) {
            return Err(Error::invalid("numeric tolerances must be positive"));
        }
        if self.karcher_max_iter == 0 || self.top_k == 0 {
            return Err(Error::invalid("karcher_max_iter and top_k must be >= 1"));
        }
        Ok(())
    }

    pub fn labels(&self) -> Result<LabelSet> {
        match &self.label_set {
            Some(p) => io::read_label_set(p),
            None => Ok(LabelSet::coma()),
        }
    }
}
