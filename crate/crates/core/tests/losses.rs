mod common;

use common::*;
use morph4d::losses::NOISE_DIM;
use morph4d::*;
use proptest::prelude::*;

#[test]
fn gp_interpolate_endpoints() {
    let mut r = rng(157);
    let p = random_unit(&mut r, 10, 3);
    let q = exp_map(&p, &random_tangent(&mut r, &p, 0.8)).unwrap();
    let g = random_tangent(&mut r, &p, 1.1);
    let at0 = gp_interpolate(&q, &g, 0.0, &p).unwrap();
    let at1 = gp_interpolate(&q, &g, 1.0, &p).unwrap();
    assert!(at0.max_abs_diff(&log_map(&p, &q).unwrap()) < 1e-12);
    assert!(at1.max_abs_diff(&g) < 1e-9);
    assert!(gp_interpolate(&q, &g, 1.5, &p).is_err());
    let other = random_unit(&mut r, 10, 3);
    assert!(gp_interpolate(&q, &TangentVector::zero(&other), 0.5, &p).is_err());
}

#[test]
fn reconstruction_loss_oracle() {
    let mut r = rng(163);
    let p = random_unit(&mut r, 8, 2);
    let v = random_tangent(&mut r, &p, 0.7);
    let q = exp_map(&p, &v).unwrap();
    assert!(reconstruction_loss_tangent(&v, &q, &p).unwrap() < 1e-9);
    assert!(reconstruction_loss_tangent(&TangentVector::zero(&p), &p, &p).unwrap() < 1e-12);

    let w = random_tangent(&mut r, &p, 0.4);
    let got = reconstruction_loss_tangent(&w, &q, &p).unwrap();
    let a = log_map(&p, &exp_map(&p, &w).unwrap()).unwrap();
    let b = log_map(&p, &q).unwrap();
    let brute: f64 = a.samples().iter().zip(b.samples().iter()).map(|(x, y)| (x - y).abs()).sum();
    assert!((got - brute).abs() < 1e-12);

    let qw = exp_map(&p, &w).unwrap();
    let swapped = reconstruction_loss_tangent(&v, &qw, &p).unwrap();
    assert!((got - swapped).abs() < 1e-9);
}

#[test]
fn adversarial_and_total_loss() {
    let w = LossWeights::default();
    let l = adversarial_loss(&[1.0, 3.0], &[0.5], &[1.0, 1.0, 1.0], &w).unwrap();
    assert_eq!(l, 1.5);
    let l = adversarial_loss(&[0.0], &[0.0], &[0.0, 2.0], &w).unwrap();
    assert_eq!(l, 10.0);
    assert!(adversarial_loss(&[], &[0.0], &[1.0], &w).is_err());
    assert!(adversarial_loss(&[0.0], &[0.0], &[-1.0], &w).is_err());
    assert_eq!(motion_total_loss(2.0, 0.5, &w), 7.0);
    assert!(LossWeights { alpha1: -1.0, ..w }.validate().is_err());
}

#[test]
fn condition_code_roundtrip() {
    let set = LabelSet::coma();
    let noise: Vec<f64> = (0..NOISE_DIM).map(|i| i as f64 * 0.01).collect();
    let code = encode_condition(set.get("eyebrow").unwrap(), set.get("mouth_up").unwrap(), &noise, set.len()).unwrap();
    let flat = code.to_flat();
    assert_eq!(flat.len(), 2 * set.len() + NOISE_DIM);
    assert_eq!(ConditionCode::from_flat(&flat, set.len()).unwrap(), code);
    assert!(encode_condition(set.get("eyebrow").unwrap(), set.get("mouth_up").unwrap(), &noise[1..], set.len()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gp_interpolate_is_affine_in_tau(seed in any::<u64>(), tau in 0.0..=1.0f64) {
        let mut r = rng(seed);
        let p = random_unit(&mut r, 6, 2);
        let q = exp_map(&p, &random_tangent(&mut r, &p, 1.0)).unwrap();
        let g = random_tangent(&mut r, &p, 0.9);
        let at0 = gp_interpolate(&q, &g, 0.0, &p).unwrap();
        let at1 = gp_interpolate(&q, &g, 1.0, &p).unwrap();
        let mid = gp_interpolate(&q, &g, tau, &p).unwrap();
        let line = at0.combine(1.0 - tau, &at1, tau).unwrap();
        prop_assert!(mid.max_abs_diff(&line) < 1e-12);
    }

    #[test]
    fn penalty_vanishes_iff_unit_gradients(norms in prop::collection::vec(0.0..3.0f64, 1..20)) {
        let w = LossWeights::default();
        let base = adversarial_loss(&[0.0], &[0.0], &norms, &w).unwrap();
        let all_unit = norms.iter().all(|&g| g == 1.0);
        prop_assert_eq!(base == 0.0, all_unit);
        prop_assert!(base >= 0.0);
        let ones = vec![1.0; norms.len()];
        prop_assert_eq!(adversarial_loss(&[0.0], &[0.0], &ones, &w).unwrap(), 0.0);
    }
}
