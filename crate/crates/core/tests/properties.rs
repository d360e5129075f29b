use std::f64::consts::{FRAC_PI_4, PI};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use ghostshield::detection::{
    detection_probability, false_alarm_probability, gaussian_tail, inner_minimum, jammed_visibility_single_photon,
    visibility, SearchSettings, TestParams,
};
use ghostshield::polarization::{
    self, bell_diagonal_state, canonical_states, coincidence_probability_bd, extract_correlations, mix,
    AnalyzerConfig, BellDiagonalParams, PureQubit,
};

/// `⟨a₁a₂|ρ|a₁a₂⟩` for a real 4×4 matrix, written out without any library.
fn sandwich(rho: &[[f64; 4]; 4], t1: f64, t2: f64) -> f64 {
    let a = [t1.cos(), t1.sin()];
    let b = [t2.cos(), t2.sin()];
    let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += v[i] * rho[i][j] * v[j];
        }
    }
    acc
}

#[test]
fn hand_built_matrices_agree_with_library() {
    let psi1 = [[0.5, 0.0, 0.0, 0.5], [0.0; 4], [0.0; 4], [0.5, 0.0, 0.0, 0.5]];
    let omega1 = [[0.5, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4], [0.0, 0.0, 0.0, 0.5]];
    assert_abs_diff_eq!(sandwich(&psi1, FRAC_PI_4, FRAC_PI_4), 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(sandwich(&omega1, FRAC_PI_4, FRAC_PI_4), 0.25, epsilon = 1e-15);

    let s = canonical_states();
    for (t1, t2) in [(0.0, 0.0), (0.3, 1.1), (FRAC_PI_4, 2.0), (2.9, 0.4)] {
        let cfg = AnalyzerConfig::pair(t1, t2).unwrap();
        let lib_psi = polarization::detection_probability(&s.psi1, &cfg).unwrap();
        let lib_omega = polarization::detection_probability(&s.omega1, &cfg).unwrap();
        assert_abs_diff_eq!(lib_psi, sandwich(&psi1, t1, t2), epsilon = 1e-14);
        assert_abs_diff_eq!(lib_omega, sandwich(&omega1, t1, t2), epsilon = 1e-14);
    }
}

fn tetrahedron_point() -> impl Strategy<Value = BellDiagonalParams> {
    (-0.25..=0.25f64, -0.25..=0.25f64, 0.0..=1.0f64).prop_map(|(x, z, t)| {
        let (lo, hi) = BellDiagonalParams::mu_y_range(x, z).unwrap();
        BellDiagonalParams { mu_x: x, mu_y: lo + t * (hi - lo), mu_z: z }
    })
}

fn any_state() -> impl Strategy<Value = polarization::PolarizationState> {
    tetrahedron_point().prop_map(|p| bell_diagonal_state(&p).unwrap())
}

proptest! {
    #[test]
    fn closed_form_matches_sandwich(p in tetrahedron_point(), t1 in 0.0..PI, t2 in 0.0..PI) {
        let rho = bell_diagonal_state(&p).unwrap();
        let direct = polarization::detection_probability(&rho, &AnalyzerConfig::pair(t1, t2).unwrap()).unwrap();
        prop_assert!((direct - coincidence_probability_bd(&p, t1, t2)).abs() < 1e-12);
    }

    #[test]
    fn correlations_invert_construction(p in tetrahedron_point()) {
        let c = extract_correlations(&bell_diagonal_state(&p).unwrap()).unwrap();
        prop_assert!(c.local_residual() < 1e-14);
        for (a, b) in c.mu.iter().zip(p.as_array()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mixing_is_affine_in_probability(a in any_state(), b in any_state(), r in 0.0..=1.0f64, t1 in 0.0..PI, t2 in 0.0..PI) {
        let cfg = AnalyzerConfig::pair(t1, t2).unwrap();
        let pa = polarization::detection_probability(&a, &cfg).unwrap();
        let pb = polarization::detection_probability(&b, &cfg).unwrap();
        let pm = polarization::detection_probability(&mix(&a, &b, r).unwrap(), &cfg).unwrap();
        prop_assert!((pm - ((1.0 - r) * pa + r * pb)).abs() < 1e-12);
    }

    #[test]
    fn visibility_symmetric_and_scale_free(p1 in 0.0..=0.5f64, p2 in 0.0..=0.5f64, c in 0.01..=2.0f64) {
        let v = visibility(p1, p2).unwrap();
        prop_assert_eq!(v, visibility(p2, p1).unwrap());
        prop_assert!((v - visibility(c * p1, c * p2).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn detection_probabilities_are_monotone() {
    let params = TestParams::default();
    let mut prev = (detection_probability(0.0, &params), false_alarm_probability(0.0, &params));
    assert_eq!(prev, (0.5, 0.5));
    for k in 1..=2000 {
        let d = k as f64 * 0.01;
        let cur = (detection_probability(d, &params), false_alarm_probability(d, &params));
        assert!(cur.0 >= prev.0 && cur.1 <= prev.1, "d = {d}");
        prev = cur;
    }
}

#[test]
fn gaussian_testing_identity() {
    // Miss probability is the complement of detection, which is the tail at the
    // sign-flipped threshold; false alarm is the tail at the threshold itself.
    for lambda in [0.5, 1.0, 3.0] {
        let params = TestParams::new(lambda, 0.5).unwrap();
        for k in 1..=200 {
            let d = k as f64 * 0.05;
            let t = lambda.ln() / d;
            assert_abs_diff_eq!(detection_probability(d, &params), 1.0 - gaussian_tail(-(t - d / 2.0)), epsilon = 1e-15);
            assert_abs_diff_eq!(false_alarm_probability(d, &params), gaussian_tail(t + d / 2.0), epsilon = 1e-15);
            assert_abs_diff_eq!(gaussian_tail(-t) + gaussian_tail(t), 1.0, epsilon = 1e-15);
        }
    }
}

#[test]
fn single_photon_helper_matches_mixed_states() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let h = PureQubit::new(0.0, 0.0).density();
    let v = PureQubit::new(PI / 2.0, 0.0).density();
    let mut checked = 0;
    while checked < 1000 {
        let (r, theta, alpha, beta) = (rng.random::<f64>(), rng.random_range(0.0..PI), rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
        let e = PureQubit::new(alpha, beta).density();
        let cfg = AnalyzerConfig::single(theta).unwrap();
        let p = |s: &polarization::PolarizationState| polarization::detection_probability(s, &cfg).unwrap();
        let overlap = p(&e);
        if 1.0 - r + r * overlap < 1e-9 {
            continue;
        }
        let direct = visibility(p(&mix(&h, &e, r).unwrap()), p(&mix(&v, &e, r).unwrap())).unwrap();
        let helper = jammed_visibility_single_photon(visibility(p(&h), p(&v)).unwrap(), r, overlap).unwrap();
        assert_abs_diff_eq!(direct, helper, epsilon = 1e-12);
        checked += 1;
    }
}

#[test]
fn inner_problem_symmetries() {
    let s = canonical_states();
    let search = SearchSettings::default();
    for (a, b) in [(&s.psi1, &s.psi2), (&s.psi1, &s.omega1), (&s.omega1, &s.omega2)] {
        for thetas in [[0.3, 2.1], [FRAC_PI_4, 1.0], [1.4, 0.2]] {
            let base = inner_minimum(a, b, thetas, Some(0.3), &search).unwrap().unwrap();
            let swapped = inner_minimum(b, a, thetas, Some(0.3), &search).unwrap().unwrap();
            let shifted = inner_minimum(a, b, [thetas[0] + PI, thetas[1]], Some(0.3), &search).unwrap().unwrap();
            assert_abs_diff_eq!(base.gap, swapped.gap, epsilon = 1e-9);
            assert_abs_diff_eq!(base.gap, shifted.gap, epsilon = 1e-9);
        }
    }
}
