//! Structural properties of the Mittag-Leffler layer.

use fracsource::mlf::{
    evaluators, ml_decay_integral, mlf, rl_integral, MittagLeffler, MlParams, TimeGrid,
};
use fracsource_oracle::{integrate, MlOracle};
use proptest::prelude::*;

fn e(alpha: f64, beta: f64, z: f64) -> f64 {
    mlf(MlParams::new(alpha, beta).unwrap(), z).unwrap()
}

#[test]
fn algebraic_decay_bound() {
    let orders = [0.3, 0.5, 0.7, 1.0];
    for &alpha in &orders {
        for &beta in &orders {
            let weighted = |z: f64| (1.0 - z) * e(alpha, beta, z).abs();
            let c = (0..=200).map(|k| weighted(-0.5 * k as f64)).fold(0.0, f64::max);
            assert!(c.is_finite() && c > 0.0);
            for k in 0..=2000 {
                let z = -0.05 * k as f64;
                assert!(
                    weighted(z) <= 1.01 * c,
                    "alpha={alpha} beta={beta} z={z}: {} > 1.01 * {c}",
                    weighted(z)
                );
            }
        }
    }
}

#[test]
fn relaxation_functions_stay_positive() {
    for k in 1..10 {
        let alpha = 0.1 * k as f64;
        let mut t = 0.0;
        while t <= 1e4 {
            assert!(e(alpha, 1.0, -t) > 0.0, "E_{{{alpha},1}}(-{t})");
            assert!(e(alpha, alpha, -t) > 0.0, "E_{{{alpha},{alpha}}}(-{t})");
            t = if t == 0.0 { 1e-3 } else { t * 1.37 };
        }
    }
}

#[test]
fn derivative_identity() {
    for &alpha in &[0.3, 0.5, 0.7, 0.9] {
        for &lambda in &[1.0, 10.0, 40.0] {
            for &t in &[0.05, 0.2, 0.5, 1.0, 2.0] {
                let f = |s: f64| e(alpha, 1.0, -lambda * s.powf(alpha));
                let h = 1e-4 * t;
                let fd = (f(t + h) - f(t - h)) / (2.0 * h);
                let exact = -lambda * t.powf(alpha - 1.0) * e(alpha, alpha, -lambda * t.powf(alpha));
                let rel = ((fd - exact) / exact).abs();
                assert!(rel <= 1e-5, "alpha={alpha} lambda={lambda} t={t}: {rel:.2e}");
            }
        }
    }
}

#[test]
fn decay_integral_tends_to_inverse_rate() {
    for &alpha in &[0.5, 0.7, 0.9, 1.0] {
        for &lambda in &[1.0, 9.87, 100.0] {
            let v = ml_decay_integral(alpha, lambda, 0.0, 1e6).unwrap();
            assert!((v - 1.0 / lambda).abs() <= 1e-3 / lambda, "alpha={alpha} lambda={lambda}: {v}");
        }
    }
}

#[test]
fn decay_integral_matches_quadrature_oracle() {
    // s^{a-1} E_{a,a}(-l s^a) ds = E_{a,a}(-l u) du / a with u = s^a.
    let alpha = 0.5;
    for &(lambda, a, b) in &[(1.0, 0.0, 1.0), (9.87, 0.1, 0.6), (30.0, 0.0, 0.25), (5.0, 0.3, 2.0)] {
        let oracle = MlOracle::new(alpha, alpha, lambda * f64::powf(b, alpha) + 1.0);
        let reference = integrate(
            |u| oracle.eval(-lambda * u) / alpha,
            f64::powf(a, alpha),
            f64::powf(b, alpha),
            1e-15,
        );
        let got = ml_decay_integral(alpha, lambda, a, b).unwrap();
        assert!((got - reference).abs() < 1e-12, "lambda={lambda} ({a},{b}): {got} vs {reference}");
    }
}

#[test]
fn fractional_integral_semigroup() {
    let grid = TimeGrid::uniform(1.0, 401).unwrap();
    // g vanishes to second order at zero, so the nested integrand stays smooth.
    let g: Vec<f64> = grid.nodes().iter().map(|t| t * t * (1.0 + t.sin())).collect();
    let inner = rl_integral(0.4, &g, &grid).unwrap();
    let nested = rl_integral(0.3, &inner, &grid).unwrap();
    let direct = rl_integral(0.7, &g, &grid).unwrap();
    let gap = nested
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-4, "{gap:.3e}");
}

#[test]
fn every_registered_evaluator_agrees_where_valid() {
    let reg = evaluators();
    let auto = reg.create("auto").unwrap();
    for name in reg.names() {
        let ev = reg.create(name).unwrap();
        for &(alpha, beta, x) in &[(0.5, 1.0, 0.5), (0.7, 0.7, 2.0), (0.6, 0.8, 3.0)] {
            if let Ok(v) = ev.eval_neg(alpha, beta, x) {
                let r = auto.eval_neg(alpha, beta, x).unwrap();
                assert!((v - r).abs() < 1e-12, "{name} at ({alpha},{beta},{x}): {v} vs {r}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decay_integral_is_additive(
        alpha in 0.2f64..1.0,
        lambda in 0.1f64..200.0,
        p in 0.0f64..3.0,
        q in 0.0f64..3.0,
        r in 0.0f64..3.0,
    ) {
        let mut v = [p, q, r];
        v.sort_by(f64::total_cmp);
        let [a, b, c] = v;
        let whole = ml_decay_integral(alpha, lambda, a, c).unwrap();
        let parts = ml_decay_integral(alpha, lambda, a, b).unwrap()
            + ml_decay_integral(alpha, lambda, b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-14, "{whole} vs {parts}");
    }

    #[test]
    fn series_and_integral_agree_on_overlap(
        alpha in 0.25f64..0.95,
        beta in 0.2f64..1.0,
        x in 0.0f64..8.0,
    ) {
        let reg = evaluators();
        let i = reg.create("integral").unwrap().eval_neg(alpha, beta, x).unwrap();
        if let Ok(s) = reg.create("series").unwrap().eval_neg(alpha, beta, x) {
            prop_assert!((s - i).abs() <= 1e-10, "{s} vs {i}");
        }
    }

    #[test]
    fn relaxation_is_monotone(alpha in 0.1f64..1.0, x in 0.0f64..500.0, dx in 1e-3f64..10.0) {
        let a = e(alpha, 1.0, -x);
        let b = e(alpha, 1.0, -(x + dx));
        prop_assert!(b <= a, "E({}) = {a} < E({}) = {b}", -x, -(x + dx));
    }
}

#[allow(dead_code)]
fn _object_safe(_: &dyn MittagLeffler) {}
