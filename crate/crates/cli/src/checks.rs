//! Fast self-checks run by `fracsource check`.

use std::f64::consts::PI;
use std::sync::Arc;

use anyhow::Result;
use fracsource::forward::{duhamel_check_with, ForwardSolver, ProblemConfig, TemporalSource};
use fracsource::mlf::{mlf, mlf_with, reference_sweep, MittagLeffler, MlParams, TimeGrid};
use fracsource::spectral::{eigenfunction_samples, DirichletSine, SpaceGrid};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn default_problem(alpha: f64, beta: f64) -> Result<ProblemConfig> {
    Ok(ProblemConfig::new(
        alpha,
        Arc::new(DirichletSine::new(40, beta)?),
        SpaceGrid::uniform(201)?,
        TimeGrid::uniform(1.0, 401)?,
    )?)
}

/// Largest deviation from the built-in high-precision table.
fn ml_reference(eval: &dyn MittagLeffler) -> Result<(f64, String)> {
    let mut worst = (0.0, String::new());
    for r in reference_sweep() {
        let v = mlf_with(eval, MlParams::new(r.alpha, r.beta)?, r.z)?;
        let e = (v - r.value).abs();
        if !(e <= worst.0) {
            worst = (e, format!("alpha={} beta={} z={}", r.alpha, r.beta, r.z));
        }
    }
    Ok(worst)
}

/// `alpha = beta = 1`, `phi = phi_1`: `u = exp(-pi^2 t) phi_1`.
fn heat_limit(eval: &dyn MittagLeffler) -> Result<f64> {
    let cfg = default_problem(1.0, 1.0)?;
    let phi1 = eigenfunction_samples(cfg.eigensystem(), 1, cfg.sgrid());
    let zero = vec![0.0; phi1.len()];
    let u = ForwardSolver::with_evaluator(cfg.clone(), TemporalSource::zero(), eval)?.solve(&phi1, &zero)?;
    let mut worst: f64 = 0.0;
    for (j, &t) in cfg.tgrid().nodes().iter().enumerate() {
        for (i, p) in phi1.iter().enumerate() {
            worst = worst.max((u.at(i, j) - (-PI * PI * t).exp() * p).abs());
        }
    }
    Ok(worst)
}

/// `f = phi_1`, `mu = 1`, `(alpha, beta) = (0.5, 0.7)`: relative `L^2` gap to
/// `lambda^{-beta} (1 - E_{alpha,1}(-lambda^beta t^alpha)) phi_1`.
fn single_mode(eval: &dyn MittagLeffler) -> Result<f64> {
    let (alpha, beta) = (0.5, 0.7);
    let cfg = default_problem(alpha, beta)?;
    let es = cfg.eigensystem();
    let phi1 = eigenfunction_samples(es, 1, cfg.sgrid());
    let mu = TemporalSource::Polynomial(vec![(1.0, 0.0)]);
    let u = ForwardSolver::with_evaluator(cfg.clone(), mu, eval)?.solve(&vec![0.0; phi1.len()], &phi1)?;
    let lam = es.fractional_eigenvalue(1);
    let p = MlParams::new(alpha, 1.0)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &t) in cfg.tgrid().nodes().iter().enumerate() {
        let c = (1.0 - mlf(p, -lam * t.powf(alpha))?) / lam;
        for (i, ph) in phi1.iter().enumerate() {
            let exact = c * ph;
            num += (u.at(i, j) - exact).powi(2);
            den += exact * exact;
        }
    }
    Ok((num / den).sqrt())
}

/// Duhamel discrepancy for `f = phi_1 + phi_3` with a unit `theta`.
fn duhamel(eval: &dyn MittagLeffler) -> Result<f64> {
    let cfg = default_problem(0.5, 0.7)?;
    let es = cfg.eigensystem();
    let f: Vec<f64> = eigenfunction_samples(es, 1, cfg.sgrid())
        .iter()
        .zip(eigenfunction_samples(es, 3, cfg.sgrid()))
        .map(|(a, b)| a + b)
        .collect();
    Ok(duhamel_check_with(&cfg, &f, &TemporalSource::unit_theta(cfg.alpha()), eval)?)
}

fn outcome(name: &'static str, tol: f64, r: Result<(f64, String)>) -> CheckOutcome {
    match r {
        Ok((v, at)) => CheckOutcome {
            name,
            passed: v <= tol,
            detail: if at.is_empty() {
                format!("{v:.3e} (tolerance {tol:.0e})")
            } else {
                format!("{v:.3e} at {at} (tolerance {tol:.0e})")
            },
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e:#}"),
        },
    }
}

/// Runs every check with `eval` in place of the default evaluator.
pub fn run_checks(eval: &dyn MittagLeffler) -> Vec<CheckOutcome> {
    let plain = |r: Result<f64>| r.map(|v| (v, String::new()));
    vec![
        outcome("ml-reference", 1e-10, ml_reference(eval)),
        outcome("heat-limit", 1e-8, plain(heat_limit(eval))),
        outcome("single-mode", 1e-6, plain(single_mode(eval))),
        outcome("duhamel", 1e-3, plain(duhamel(eval))),
    ]
}
