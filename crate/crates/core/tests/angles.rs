mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeplan::embedding::{adjust_angle, invert_angle};

const EPS: f64 = 1e-12;

/// The interval the embedded angle must stay in: between the target and
/// the straight line for positive ratios, between the target and the
/// folded-back parent edge for negative ones.
fn allowed(theta: f64, ra: f64) -> (f64, f64) {
    match (theta <= PI, ra >= 0.0) {
        (true, true) => (theta, PI),
        (true, false) => (0.0, theta),
        (false, true) => (PI, theta),
        (false, false) => (theta, TAU),
    }
}

#[test]
fn hundred_thousand_samples_stay_on_their_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for _ in 0..100_000 {
        let theta = rng.gen_range(0.0..TAU);
        let ra = rng.gen_range(-1.0..=1.0);
        let e = adjust_angle(theta, ra);
        let (lo, hi) = allowed(theta, ra);
        if !(lo - EPS..=hi + EPS).contains(&e) || (adjust_angle(theta, 0.0) - theta).abs() > EPS {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn endpoints() {
    for theta in [0.3, 1.0, PI, 4.0, 6.0] {
        assert!((adjust_angle(theta, 1.0) - PI).abs() < EPS);
    }
    assert!(adjust_angle(1.0_f64, -1.0).abs() < EPS);
    assert!((adjust_angle(4.0, -1.0) - TAU).abs() < EPS);
}

#[test]
fn f32_agrees_with_f64() {
    let a = adjust_angle(2.0_f32, -0.25_f32);
    assert!((a as f64 - adjust_angle(2.0, -0.25)).abs() < 1e-6);
}

proptest! {
    #[test]
    fn zero_ratio_is_identity(theta in 0.0..TAU) {
        prop_assert!((adjust_angle(theta, 0.0) - theta).abs() < EPS);
    }

    #[test]
    fn within_bounds(theta in 0.0..TAU, ra in -1.0..=1.0f64) {
        let (lo, hi) = allowed(theta, ra);
        let e = adjust_angle(theta, ra);
        prop_assert!(e >= lo - EPS && e <= hi + EPS, "theta {theta} ra {ra} -> {e}");
    }

    #[test]
    fn monotone_in_ratio(theta in 0.0..TAU, a in -1.0..=1.0f64, b in -1.0..=1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (el, eh) = (adjust_angle(theta, lo), adjust_angle(theta, hi));
        // reflex targets open toward 2π as the ratio falls
        if theta <= PI {
            prop_assert!(el <= eh + EPS);
        } else {
            prop_assert!(el >= eh - EPS);
        }
    }

    #[test]
    fn inverse_recovers_ratio(theta in 0.05..(TAU - 0.05), ra in -1.0..=1.0f64) {
        prop_assume!((theta - PI).abs() > 0.05);
        let back = invert_angle(theta, adjust_angle(theta, ra));
        prop_assert!((back - ra).abs() < 1e-9, "{back} vs {ra}");
    }
}
