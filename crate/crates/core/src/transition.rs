//! Expression transitions: peak-to-peak synthesis by geodesic interpolation,
//! prototype-based filtering, chained composition, and motion transfer.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::geodesic_interpolate;
use crate::srvf::{srvf_decode_restored, srvf_encode, Srvf};
use crate::trajectory::{LandmarkFrame, LandmarkSequence};

/// Default number of frames of a synthesized transition.
pub const DEFAULT_STEPS: usize = 30;

/// Max coordinate difference for two init frames to count as the same neutral.
pub const INIT_TOLERANCE: f64 = 1e-6;

pub const NEUTRAL: &str = "neutral";

/// The thirteen CoMA expression classes, neutral first.
pub const COMA_LABELS: [&str; 13] = [
    NEUTRAL,
    "bareteeth",
    "cheeks_in",
    "eyebrow",
    "high_smile",
    "lips_back",
    "lips_up",
    "mouth_down",
    "mouth_extreme",
    "mouth_middle",
    "mouth_open",
    "mouth_side",
    "mouth_up",
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExpressionLabel {
    pub id: usize,
    pub name: String,
}

impl ExpressionLabel {
    pub fn is_neutral(&self) -> bool {
        self.name == NEUTRAL
    }
}

/// An ordered set of labels with unique names; ids are positions.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    labels: Vec<ExpressionLabel>,
}

impl LabelSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("label set is empty"));
        }
        let mut labels: Vec<ExpressionLabel> = Vec::with_capacity(names.len());
        for (id, name) in names.iter().enumerate() {
            let name = name.as_ref();
            if labels.iter().any(|l| l.name == name) {
                return Err(Error::invalid(format!("duplicate label '{name}'")));
            }
            labels.push(ExpressionLabel {
                id,
                name: name.to_owned(),
            });
        }
        Ok(Self { labels })
    }

    pub fn coma() -> Self {
        Self::new(&COMA_LABELS).expect("static label set is valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ExpressionLabel] {
        &self.labels
    }

    pub fn get(&self, name: &str) -> Result<&ExpressionLabel> {
        self.labels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_owned()))
    }

    pub fn by_id(&self, id: usize) -> Result<&ExpressionLabel> {
        self.labels
            .get(id)
            .ok_or_else(|| Error::UnknownLabel(format!("#{id}")))
    }

    pub fn contains(&self, label: &ExpressionLabel) -> bool {
        self.labels.get(label.id) == Some(label)
    }
}

impl Default for LabelSet {
    fn default() -> Self {
        Self::coma()
    }
}

/// An SRVF motion between two expressions together with its start frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMotion {
    pub motion: Srvf,
    pub start: ExpressionLabel,
    pub end: ExpressionLabel,
    pub init: LandmarkFrame,
}

impl LabeledMotion {
    pub fn new(
        motion: Srvf,
        start: ExpressionLabel,
        end: ExpressionLabel,
        init: LandmarkFrame,
    ) -> Result<Self> {
        if init.k() != motion.k() {
            return Err(Error::shape(format!(
                "motion has {} landmarks, init frame has {}",
                motion.k(),
                init.k()
            )));
        }
        Ok(Self {
            motion,
            start,
            end,
            init,
        })
    }

    /// Encodes a landmark sequence, taking its first frame as `init`.
    pub fn from_sequence(
        seq: &LandmarkSequence,
        start: ExpressionLabel,
        end: ExpressionLabel,
    ) -> Result<Self> {
        Self::new(srvf_encode(seq)?, start, end, seq.first().clone())
    }

    /// The motion decoded at its original scale from `init`.
    pub fn decode(&self) -> Result<LandmarkSequence> {
        srvf_decode_restored(&self.motion, &self.init)
    }
}

/// A landmark sequence tagged with its start and end expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSequence {
    pub sequence: LandmarkSequence,
    pub start: ExpressionLabel,
    pub end: ExpressionLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionPrototype {
    pub label: ExpressionLabel,
    pub frame: LandmarkFrame,
}

/// Splits a sequence at its apex; the apex frame belongs to both halves.
///
/// Without an explicit index the apex is the frame with the largest mean
/// landmark distance from frame 0.
pub fn split_at_peak(
    seq: &LandmarkSequence,
    peak_index: Option<usize>,
) -> Result<(LandmarkSequence, LandmarkSequence)> {
    let t = seq.len();
    if t < 3 {
        return Err(Error::SequenceTooShort { min: 3, got: t });
    }
    let peak = match peak_index {
        Some(i) if i == 0 || i >= t - 1 => {
            return Err(Error::invalid(format!(
                "peak index {i} must be interior to a {t}-frame sequence"
            )))
        }
        Some(i) => i,
        None => {
            let first = seq.first();
            let mut best = (0, f64::NEG_INFINITY);
            for (i, f) in seq.frames().iter().enumerate() {
                let d = f.mean_landmark_distance(first);
                if d > best.1 {
                    best = (i, d);
                }
            }
            if best.0 == 0 || best.0 == t - 1 {
                return Err(Error::NoInteriorPeak { index: best.0 });
            }
            best.0
        }
    };
    let frames = seq.frames();
    let onset = LandmarkSequence::with_dt(frames[..=peak].to_vec(), seq.dt())?;
    let offset = LandmarkSequence::with_dt(frames[peak..].to_vec(), seq.dt())?;
    Ok((onset, offset))
}

/// Synthesizes a transition from the peak of `m1` to the peak of `m2`.
///
/// Both motions must be onsets (neutral to peak) from the same neutral frame.
/// For `tau_i = i/(n-1)` the interpolated motion `psi(tau_i)` is decoded from
/// the shared neutral, and its last frame becomes output frame `i`.
pub fn synth_peak_transition(
    m1: &LabeledMotion,
    m2: &LabeledMotion,
    n_steps: usize,
) -> Result<LabeledSequence> {
    if n_steps < 2 {
        return Err(Error::invalid(format!("n_steps must be at least 2, got {n_steps}")));
    }
    for m in [m1, m2] {
        if !m.start.is_neutral() {
            return Err(Error::invalid(format!(
                "peak-peak synthesis needs onset motions; motion starts at '{}'",
                m.start.name
            )));
        }
    }
    if m1.init.k() != m2.init.k() {
        return Err(Error::shape("motions have different landmark counts"));
    }
    let max_diff = m1.init.max_abs_diff(&m2.init);
    if max_diff > INIT_TOLERANCE {
        return Err(Error::IncoherentInit { max_diff });
    }
    let frames = (0..n_steps)
        .into_par_iter()
        .map(|i| {
            let tau = i as f64 / (n_steps - 1) as f64;
            let q = geodesic_interpolate(&m1.motion, &m2.motion, tau)?;
            Ok(srvf_decode_restored(&q, &m1.init)?.last().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledSequence {
        sequence: LandmarkSequence::new(frames)?,
        start: m1.end.clone(),
        end: m2.end.clone(),
    })
}

/// Coordinate-wise mean of the subjects' peak frames.
pub fn expression_prototype(
    peaks: &[(String, LandmarkFrame)],
    label: ExpressionLabel,
) -> Result<ExpressionPrototype> {
    let (_, first) = peaks
        .first()
        .ok_or_else(|| Error::invalid("no peak frames for prototype"))?;
    let k = first.k();
    let mut sum = vec![[0.0; 3]; k];
    for (subject, f) in peaks {
        if f.k() != k {
            return Err(Error::shape(format!(
                "subject {subject} has {} landmarks, expected {k}",
                f.k()
            )));
        }
        for (s, p) in sum.iter_mut().zip(f.points()) {
            for a in 0..3 {
                s[a] += p[a];
            }
        }
    }
    let n = peaks.len() as f64;
    let frame = LandmarkFrame::new(sum.into_iter().map(|s| s.map(|v| v / n)).collect())?;
    Ok(ExpressionPrototype { label, frame })
}

/// A transition kept by [`select_by_prototype`].
#[derive(Clone, Debug, PartialEq)]
pub struct Selected {
    /// Position in the input list.
    pub index: usize,
    pub score: f64,
}

/// Endpoint-to-prototype distance: mean landmark distance of the first frame
/// to the start prototype plus that of the last frame to the end prototype.
pub fn prototype_score(
    transition: &LabeledSequence,
    start: &ExpressionPrototype,
    end: &ExpressionPrototype,
) -> Result<f64> {
    let seq = &transition.sequence;
    if seq.k() != start.frame.k() || seq.k() != end.frame.k() {
        return Err(Error::shape("prototype and transition landmark counts differ"));
    }
    Ok(seq.first().mean_landmark_distance(&start.frame)
        + seq.last().mean_landmark_distance(&end.frame))
}

/// Keeps, for every (start, end) label pair, the `top_k` transitions whose
/// endpoints lie closest to the expression prototypes.
///
/// Groups appear in order of first occurrence; within a group entries are in
/// ascending score order, ties broken by input position.
pub fn select_by_prototype(
    transitions: &[LabeledSequence],
    prototypes: &[ExpressionPrototype],
    top_k: usize,
) -> Result<Vec<Selected>> {
    let lookup: HashMap<&ExpressionLabel, &ExpressionPrototype> =
        prototypes.iter().map(|p| (&p.label, p)).collect();
    let proto = |label: &ExpressionLabel| {
        lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::invalid(format!("missing prototype for label '{}'", label.name)))
    };

    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut groups: HashMap<(usize, usize), Vec<Selected>> = HashMap::new();
    for (index, t) in transitions.iter().enumerate() {
        let score = prototype_score(t, proto(&t.start)?, proto(&t.end)?)?;
        let key = (t.start.id, t.end.id);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(Selected { index, score });
    }

    let mut kept = Vec::new();
    for key in order {
        let mut group = groups.remove(&key).unwrap_or_default();
        group.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.index.cmp(&b.index)));
        group.truncate(top_k);
        kept.extend(group);
    }
    Ok(kept)
}

/// Chains motions into one sequence: each motion is decoded from the last
/// frame of the previous one, and the duplicated junction frame is dropped.
pub fn compose_transitions(
    motions: &[LabeledMotion],
    init: &LandmarkFrame,
) -> Result<LandmarkSequence> {
    let first = motions
        .first()
        .ok_or_else(|| Error::invalid("nothing to compose"))?;
    for (i, pair) in motions.windows(2).enumerate() {
        if pair[0].end != pair[1].start {
            return Err(Error::BrokenChain {
                index: i + 1,
                end: pair[0].end.name.clone(),
                start: pair[1].start.name.clone(),
            });
        }
    }
    let dt = first.motion.dt();
    let mut frames: Vec<LandmarkFrame> = Vec::new();
    let mut current = init.clone();
    for m in motions {
        let decoded = srvf_decode_restored(&m.motion, &current)?;
        let skip = usize::from(!frames.is_empty());
        current = decoded.last().clone();
        frames.extend(decoded.into_frames().into_iter().skip(skip));
    }
    LandmarkSequence::with_dt(frames, dt)
}

/// Picks, for each consecutive label pair of `recipe`, the first motion in
/// `library` with that start and end label.
pub fn motions_for_recipe<S: AsRef<str>>(
    library: &[LabeledMotion],
    recipe: &[S],
) -> Result<Vec<LabeledMotion>> {
    if recipe.len() < 2 {
        return Err(Error::invalid("a recipe needs at least two labels"));
    }
    recipe
        .windows(2)
        .map(|pair| {
            let (from, to) = (pair[0].as_ref(), pair[1].as_ref());
            library
                .iter()
                .find(|m| m.start.name == from && m.end.name == to)
                .cloned()
                .ok_or_else(|| Error::invalid(format!("no motion from '{from}' to '{to}' in the library")))
        })
        .collect()
}

/// Re-applies the motion of `source` starting from `target_init`.
pub fn transfer_motion(
    source: &LandmarkSequence,
    target_init: &LandmarkFrame,
) -> Result<LandmarkSequence> {
    if source.k() != target_init.k() {
        return Err(Error::shape(format!(
            "source has {} landmarks, target has {}",
            source.k(),
            target_init.k()
        )));
    }
    srvf_decode_restored(&srvf_encode(source)?, target_init)
}
