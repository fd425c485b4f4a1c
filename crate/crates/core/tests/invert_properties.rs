//! Properties of the Levenberg-Marquardt layer on a reduced problem.

use std::f64::consts::PI;
use std::sync::Arc;

use fracsource::forward::{ForwardSolver, ProblemConfig, TemporalSource};
use fracsource::invert::{
    bases, lm_step, relative_error, rho_schedule, InverseProblem, LmSettings, SourceModel,
    StopReason,
};
use fracsource::mlf::TimeGrid;
use fracsource::observe::{add_noise, st_distance};
use fracsource::spectral::{DirichletSine, Region, SpaceGrid, Subdomain};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(basis: &str, count: usize, t1: f64) -> InverseProblem {
    let cfg = ProblemConfig::new(
        0.5,
        Arc::new(DirichletSine::new(24, 0.7).unwrap()),
        SpaceGrid::uniform(101).unwrap(),
        TimeGrid::uniform(1.0, 121).unwrap(),
    )
    .unwrap();
    let omega = Subdomain::new(0.0, 0.06).unwrap();
    let support = Region::complement_of(&omega).unwrap();
    let solver = ForwardSolver::new(cfg, TemporalSource::ConstantUntil { value: 1.0, t0: 0.5 }).unwrap();
    let window = fracsource::observe::ObservationWindow::new(omega, t1, 1.0).unwrap();
    let basis = bases().create(basis).unwrap().build(&support, count).unwrap();
    InverseProblem::new(solver, window, basis).unwrap()
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * f64::EPSILON - 1.0
}

fn f_true(p: &InverseProblem) -> Vec<f64> {
    p.solver()
        .config()
        .sgrid()
        .sample(|x| if x < 0.06 { 0.0 } else { x.powi(4) + x * (PI * x).sin() })
}

fn flat(p: &InverseProblem, a: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(p.forward_map(a).unwrap().samples().as_slice())
}

#[test]
fn zero_coefficients_observe_nothing_and_the_map_is_linear() {
    let p = problem("hat", 8, 0.1);
    let n = p.basis().len();
    assert!(flat(&p, &vec![0.0; n]).iter().all(|&v| v == 0.0));
    let a1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
    let a2: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let sum: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
    let lhs = flat(&p, &sum);
    let rhs = flat(&p, &a1) + flat(&p, &a2);
    let gap = (&lhs - &rhs).amax();
    assert!(gap <= 1e-12 * lhs.amax(), "{gap:e}");
}

#[test]
fn unit_coefficient_matches_direct_solve() {
    for kind in ["hat", "hat-clamped", "pwc"] {
        let p = problem(kind, 6, 0.1);
        let mut e1 = vec![0.0; 6];
        e1[0] = 1.0;
        let chi = p.basis().sample(0, p.solver().config().sgrid());
        let direct = p.observe(&chi).unwrap();
        let via = p.forward_map(&e1).unwrap();
        let gap = (direct.samples() - via.samples()).amax();
        assert!(gap <= 1e-12 * direct.samples().amax(), "{kind}: {gap:e}");
    }
}

#[test]
fn jacobian_columns_are_exact_sensitivities() {
    let p = problem("hat", 6, 0.1);
    let a: Vec<f64> = (0..6).map(|i| 0.3 * i as f64 - 0.5).collect();
    let j1 = p.jacobian_fd(&a, 1e-3).unwrap();
    let j2 = p.jacobian_fd(&a, 2e-3).unwrap();
    let scale = j1.matrix().amax();
    assert!((j1.matrix() - j2.matrix()).amax() <= 1e-10 * scale);
    for n in 0..6 {
        let mut e = vec![0.0; 6];
        e[n] = 1.0;
        let col = flat(&p, &e);
        let gap = (j1.matrix().column(n) - &col).amax();
        assert!(gap <= 1e-9 * scale, "column {n}: {gap:e}");
    }
    assert!(p.jacobian_fd(&a, 0.0).is_err());
}

struct Normal {
    jac: fracsource::invert::Jacobian,
    r: DVector<f64>,
    w: DVector<f64>,
    gram: DMatrix<f64>,
}

fn normal_system(seed: u64) -> Normal {
    let p = problem("hat", 8, 0.1);
    let data = add_noise(&p.observe(&f_true(&p)).unwrap(), 0.01, seed).unwrap();
    let jac = p.jacobian_fd(&[0.0; 8], 1e-3).unwrap();
    let r = DVector::from_column_slice(data.samples().as_slice());
    Normal {
        w: p.weights(&data),
        gram: p.basis().gram(),
        jac,
        r,
    }
}

/// Central difference of the quadratic objective
/// `0.5 |r - J d|_W^2 + 0.5 rho d^T G d` along `v`. For a quadratic it is
/// exact in any step, so it is written out without the cancelling terms.
fn slope(n: &Normal, rho: f64, d: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let res = &n.r - n.jac.matrix() * d;
    let jv = n.jac.matrix() * v;
    let fit: f64 = res.iter().zip(jv.iter()).zip(n.w.iter()).map(|((r, j), w)| w * r * j).sum();
    -fit + rho * v.dot(&(&n.gram * d))
}

#[test]
fn step_zeroes_the_objective_gradient() {
    let n = normal_system(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &rho in &[0.9, 0.5, 1e-2, 1e-4] {
        let d = lm_step(&n.jac, &n.r, &n.w, &n.gram, rho).unwrap();
        let zero = DVector::zeros(d.len());
        for _ in 0..20 {
            let v = DVector::from_fn(d.len(), |_, _| unit(&mut rng));
            let reference = slope(&n, rho, &zero, &v).abs();
            let at = slope(&n, rho, &d, &v).abs();
            assert!(at <= 1e-8 * reference, "rho={rho}: {at:e} vs {reference:e}");
        }
    }
}

#[test]
fn step_shrinks_as_regularization_grows() {
    let n = normal_system(5);
    let norms: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&rho| lm_step(&n.jac, &n.r, &n.w, &n.gram, rho).unwrap().norm())
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    assert!(norms[3] < 2e-3 * norms[0]);
}

#[test]
fn normal_matrix_stays_positive_definite() {
    let n = normal_system(7);
    let mut wj = n.jac.matrix().clone();
    for (mut row, wi) in wj.row_iter_mut().zip(n.w.iter()) {
        row *= *wi;
    }
    let q = n.jac.matrix().tr_mul(&wj);
    let s = LmSettings::default();
    for k in 1..=s.k_max {
        let m = &q + &n.gram * rho_schedule(k, &s);
        let min = m.symmetric_eigen().eigenvalues.min();
        assert!(min > 0.0, "k={k}: {min:e}");
    }
}

#[test]
fn zero_residual_gives_zero_step() {
    let n = normal_system(1);
    let d = lm_step(&n.jac, &DVector::zeros(n.r.len()), &n.w, &n.gram, 0.5).unwrap();
    assert!(d.iter().all(|&v| v == 0.0));
}

#[test]
fn noiseless_runs_use_every_iteration() {
    let p = problem("hat", 8, 0.1);
    let data = p.observe(&f_true(&p)).unwrap();
    let (_, trace) = p.run(&data, &LmSettings::default(), &[0.0; 8]).unwrap();
    assert_eq!(trace.records.len(), 40);
    assert_eq!(trace.stopping_index(), 40);
    assert_eq!(trace.stop, StopReason::IterationCap);
    let s = LmSettings::default();
    for r in &trace.records {
        assert_eq!(r.rho, rho_schedule(r.k, &s));
        assert!(r.residual.is_finite() && r.residual >= 0.0);
    }
}

#[test]
fn discrepancy_stop_is_exact() {
    let p = problem("hat", 8, 0.1);
    let clean = p.observe(&f_true(&p)).unwrap();
    let s = LmSettings::default();
    for seed in 0..4 {
        for &eps in &[0.001, 0.01] {
            let data = add_noise(&clean, eps, seed).unwrap();
            let (m, trace) = p.run(&data, &s, &[0.0; 8]).unwrap();
            assert_eq!(trace.stop, StopReason::Discrepancy, "eps={eps} seed={seed}");
            let e = trace.residuals();
            let k = trace.stopping_index();
            let bound = s.eta * data.delta();
            assert!(e[k] <= bound);
            if k > 1 {
                assert!(e[k - 1] > bound);
            }
            // E_K is the distance of the returned model's prediction to the data.
            let pred = p.forward_map(m.coefficients()).unwrap();
            let direct = st_distance(&pred, &data).unwrap();
            assert!((direct - e[k]).abs() <= 1e-10 * e[k], "{direct} vs {}", e[k]);
        }
    }
}

#[test]
fn noiseless_error_decreases_initially() {
    let p = problem("hat", 8, 0.1);
    let a_true: Vec<f64> = (0..8).map(|i| 1.0 + 0.5 * (i as f64).cos()).collect();
    let model = SourceModel::new(p.basis().clone(), a_true).unwrap();
    let grid = p.solver().config().sgrid();
    let f = model.sample(grid);
    let data = p.observe(&f).unwrap();
    let (_, trace) = p.run(&data, &LmSettings::default(), &[0.0; 8]).unwrap();
    let errs: Vec<f64> = trace
        .records
        .iter()
        .take(5)
        .map(|r| {
            let m = SourceModel::new(p.basis().clone(), r.a.clone()).unwrap();
            relative_error(&m.sample(grid), &f, p.support(), grid).unwrap()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn relative_error_examples() {
    let p = problem("hat", 8, 0.1);
    let grid = p.solver().config().sgrid();
    let f = f_true(&p);
    let region = p.support();
    assert_eq!(relative_error(&f, &f, region, grid).unwrap(), 0.0);
    assert!((relative_error(&vec![0.0; f.len()], &f, region, grid).unwrap() - 1.0).abs() < 1e-15);
    let scaled: Vec<f64> = f.iter().map(|v| 1.1 * v).collect();
    assert!((relative_error(&scaled, &f, region, grid).unwrap() - 0.1).abs() < 1e-12);
    assert!(relative_error(&f, &vec![0.0; f.len()], region, grid).is_err());
}
