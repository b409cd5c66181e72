mod common;

use common::*;
use morph4d::transition::{prototype_score, NEUTRAL};
use morph4d::*;
use proptest::prelude::*;
use rand::Rng;

fn label(name: &str) -> ExpressionLabel {
    LabelSet::coma().get(name).unwrap().clone()
}

/// Onset from `neutral` to `peak` along `neutral + s(t) (peak - neutral) + bump(t)`
/// where the bump vanishes at both ends, so the last frame is exactly `peak`.
fn onset(neutral: &LandmarkFrame, peak: &LandmarkFrame, t: usize, wobble: f64) -> LandmarkSequence {
    let frames = (0..t)
        .map(|i| {
            let s = i as f64 / (t - 1) as f64;
            let ease = s * s * (3.0 - 2.0 * s);
            let bump = wobble * (std::f64::consts::PI * s).sin().powi(2);
            let flat: Vec<f64> = neutral
                .flat()
                .zip(peak.flat())
                .enumerate()
                .map(|(c, (a, b))| a + ease * (b - a) + bump * ((c % 3) as f64 - 1.0))
                .collect();
            LandmarkFrame::from_flat(&flat).unwrap()
        })
        .collect();
    LandmarkSequence::new(frames).unwrap()
}

#[test]
fn peak_transition_endpoints_match_closed_form_peaks() {
    let mut r = rng(23);
    let neutral = random_frame(&mut r, 10, 20.0);
    let peak1 = neutral.translated([0.0, 3.0, 0.0]);
    let peak2 = LandmarkFrame::from_flat(
        &neutral.flat().enumerate().map(|(i, v)| v + 0.2 * (i as f64).sin()).collect::<Vec<_>>(),
    )
    .unwrap();
    let m1 = LabeledMotion::from_sequence(&onset(&neutral, &peak1, 30, 0.5), label(NEUTRAL), label("eyebrow")).unwrap();
    let m2 = LabeledMotion::from_sequence(&onset(&neutral, &peak2, 30, -0.3), label(NEUTRAL), label("mouth_open")).unwrap();
    let out = synth_peak_transition(&m1, &m2, 30).unwrap();
    assert_eq!(out.sequence.len(), 30);
    assert!(out.sequence.first().max_abs_diff(&peak1) < 1e-6);
    assert!(out.sequence.last().max_abs_diff(&peak2) < 1e-6);
    assert_eq!((out.start.name.as_str(), out.end.name.as_str()), ("eyebrow", "mouth_open"));
}

#[test]
fn identical_motions_give_constant_transition() {
    let mut r = rng(29);
    let neutral = random_frame(&mut r, 5, 10.0);
    let peak = random_frame(&mut r, 5, 10.0);
    let m = LabeledMotion::from_sequence(&onset(&neutral, &peak, 30, 0.2), label(NEUTRAL), label("lips_up")).unwrap();
    let out = synth_peak_transition(&m, &m, 30).unwrap();
    for f in out.sequence.frames() {
        assert!(f.max_abs_diff(out.sequence.first()) < 1e-9);
        assert!(f.max_abs_diff(&peak) < 1e-9);
    }
}

#[test]
fn composition_length_and_junctions() {
    let mut r = rng(31);
    let init = random_frame(&mut r, 6, 10.0);
    let labels = ["neutral", "eyebrow", "mouth_open", "neutral"];
    let motions: Vec<LabeledMotion> = labels
        .windows(2)
        .map(|w| {
            let s = smooth_sequence(&mut r, 6, 30);
            LabeledMotion::from_sequence(&s, label(w[0]), label(w[1])).unwrap()
        })
        .collect();
    let out = compose_transitions(&motions, &init).unwrap();
    assert_eq!(out.len(), 88);

    // each decoded piece starts exactly at its predecessor's last frame
    let mut current = init.clone();
    let mut offset = 0;
    for m in &motions {
        let piece = srvf_decode_restored(&m.motion, &current).unwrap();
        assert_eq!(piece.first(), &current);
        assert_eq!(&out.frames()[offset..offset + 30], piece.frames());
        current = piece.last().clone();
        offset += 29;
    }
}

#[test]
fn single_motion_composition_is_decode() {
    let mut r = rng(37);
    let s = smooth_sequence(&mut r, 3, 15);
    let m = LabeledMotion::from_sequence(&s, label(NEUTRAL), label("cheeks_in")).unwrap();
    let init = random_frame(&mut r, 3, 5.0);
    let out = compose_transitions(std::slice::from_ref(&m), &init).unwrap();
    assert_eq!(out, srvf_decode_restored(&m.motion, &init).unwrap());
}

#[test]
fn motion_then_reverse_returns_home() {
    let mut r = rng(41);
    let s = smooth_sequence(&mut r, 4, 30);
    let reversed = LandmarkSequence::new(s.frames().iter().rev().cloned().collect()).unwrap();
    let there = LabeledMotion::from_sequence(&s, label(NEUTRAL), label("high_smile")).unwrap();
    let back = LabeledMotion::from_sequence(&reversed, label("high_smile"), label(NEUTRAL)).unwrap();
    let out = compose_transitions(&[there, back], s.first()).unwrap();
    assert_eq!(out.len(), 59);
    assert!(out.last().max_abs_diff(s.first()) < 1e-9);
}

#[test]
fn transfer_identity_offset_and_displacements() {
    let mut r = rng(43);
    let source = smooth_sequence(&mut r, 8, 30);
    let same = transfer_motion(&source, source.first()).unwrap();
    assert!(same.max_abs_diff(&source) < 1e-9);

    let shifted = transfer_motion(&source, &source.first().translated([4.0, -2.0, 1.0])).unwrap();
    assert!(shifted.max_abs_diff(&source.translated([4.0, -2.0, 1.0])) < 1e-12);

    // mouth-open style motion moved onto a wider face
    let wide = source.first().scaled(1.4);
    let moved = transfer_motion(&source, &wide).unwrap();
    assert_eq!(moved.len(), source.len());
    for (a, b) in moved.frames().windows(2).zip(source.frames().windows(2)) {
        let da: Vec<f64> = a[1].flat().zip(a[0].flat()).map(|(x, y)| x - y).collect();
        let db: Vec<f64> = b[1].flat().zip(b[0].flat()).map(|(x, y)| x - y).collect();
        for (x, y) in da.iter().zip(&db) {
            assert!((x - y).abs() < 1e-9);
        }
    }
    assert!(transfer_motion(&source, &random_frame(&mut r, 3, 1.0)).is_err());
}

#[test]
fn prototype_matches_bruteforce_mean() {
    let mut r = rng(47);
    let frames: Vec<(String, LandmarkFrame)> = (0..3)
        .map(|i| (format!("s{i}"), random_frame(&mut r, 7, 10.0)))
        .collect();
    let p = expression_prototype(&frames, label("bareteeth")).unwrap();
    for j in 0..7 {
        for a in 0..3 {
            let mean = (frames[0].1.points()[j][a] + frames[1].1.points()[j][a] + frames[2].1.points()[j][a]) / 3.0;
            assert!((p.frame.points()[j][a] - mean).abs() < 1e-12);
        }
    }
}

fn prototypes(r: &mut impl Rng, names: &[&str], k: usize) -> Vec<ExpressionPrototype> {
    names
        .iter()
        .map(|n| ExpressionPrototype {
            label: label(n),
            frame: random_frame(r, k, 10.0),
        })
        .collect()
}

fn candidate(r: &mut impl Rng, start: &ExpressionPrototype, end: &ExpressionPrototype, noise: f64) -> LabeledSequence {
    let k = start.frame.k();
    let jitter = |r: &mut _, f: &LandmarkFrame| {
        LandmarkFrame::from_flat(&f.flat().map(|v| v + noise * gaussian(r)).collect::<Vec<_>>()).unwrap()
    };
    let a = jitter(r, &start.frame);
    let b = jitter(r, &end.frame);
    let mid = random_frame(r, k, 10.0);
    LabeledSequence {
        sequence: LandmarkSequence::new(vec![a, mid, b]).unwrap(),
        start: start.label.clone(),
        end: end.label.clone(),
    }
}

#[test]
fn exact_prototype_endpoints_score_zero() {
    let mut r = rng(53);
    let protos = prototypes(&mut r, &["eyebrow", "lips_back"], 4);
    let exact = candidate(&mut r, &protos[0], &protos[1], 0.0);
    let noisy = candidate(&mut r, &protos[0], &protos[1], 1.0);
    assert_eq!(prototype_score(&exact, &protos[0], &protos[1]).unwrap(), 0.0);
    let kept = select_by_prototype(&[noisy, exact], &protos, 1).unwrap();
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].index, 1);
}

#[test]
fn selection_matches_sort_oracle() {
    let mut r = rng(59);
    let protos = prototypes(&mut r, &["eyebrow", "lips_back"], 5);
    let cands: Vec<LabeledSequence> = (0..10)
        .map(|_| {
            let noise = 2.0 * r.random::<f64>();
            candidate(&mut r, &protos[0], &protos[1], noise)
        })
        .collect();
    // brute force: score by hand, sort, take three
    let mut scored: Vec<(f64, usize)> = cands
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = |f: &LandmarkFrame, g: &LandmarkFrame| {
                (0..5)
                    .map(|j| {
                        let (p, q) = (f.points()[j], g.points()[j]);
                        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
                    })
                    .sum::<f64>()
                    / 5.0
            };
            (d(c.sequence.first(), &protos[0].frame) + d(c.sequence.last(), &protos[1].frame), i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let kept = select_by_prototype(&cands, &protos, 3).unwrap();
    let got: Vec<usize> = kept.iter().map(|s| s.index).collect();
    let want: Vec<usize> = scored[..3].iter().map(|s| s.1).collect();
    assert_eq!(got, want);
    for (s, w) in kept.iter().zip(&scored) {
        assert!((s.score - w.0).abs() < 1e-12);
    }
}

#[test]
fn selection_is_per_label_pair_and_needs_prototypes() {
    let mut r = rng(61);
    let protos = prototypes(&mut r, &["eyebrow", "lips_back", "mouth_up"], 3);
    let mut cands = Vec::new();
    for _ in 0..4 {
        cands.push(candidate(&mut r, &protos[0], &protos[1], 1.0));
        cands.push(candidate(&mut r, &protos[1], &protos[2], 1.0));
    }
    let kept = select_by_prototype(&cands, &protos, 2).unwrap();
    assert_eq!(kept.len(), 4);
    assert!(kept[..2].iter().all(|s| s.index % 2 == 0));
    assert!(kept[2..].iter().all(|s| s.index % 2 == 1));
    assert!(select_by_prototype(&cands, &protos[..2], 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dominated_candidate_never_changes_selection(seed in any::<u64>(), top_k in 1usize..4) {
        let mut r = rng(seed);
        let protos = prototypes(&mut r, &["eyebrow", "mouth_side"], 4);
        let mut cands: Vec<LabeledSequence> = (0..6)
            .map(|_| candidate(&mut r, &protos[0], &protos[1], 1.0))
            .collect();
        let before = select_by_prototype(&cands, &protos, top_k).unwrap();
        // farther than every existing candidate on both endpoints
        cands.push(candidate(&mut r, &protos[0], &protos[1], 1e4));
        let after = select_by_prototype(&cands, &protos, top_k).unwrap();
        prop_assert_eq!(before, after);
    }
}
