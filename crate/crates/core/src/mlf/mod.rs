//! Mittag-Leffler functions on the negative real axis, the exact
//! antiderivative of the fractional relaxation kernel, and the
//! Riemann-Liouville fractional integral on a uniform time grid.

mod eval;
pub mod gamma;
pub mod quadrature;

use std::sync::Arc;

pub use eval::{Asymptotic, Composite, MittagLeffler, RealAxisIntegral, Series};

use crate::error::{domain, invalid, Result};
use crate::registry::Registry;

/// Parameters `(alpha, beta)` of `E_{alpha,beta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    alpha: f64,
    beta: f64,
}

impl MlParams {
    /// `alpha` in `(0, 2]`, `beta` finite.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return domain(format!("alpha must lie in (0, 2], got {alpha}"));
        }
        if !beta.is_finite() {
            return domain(format!("beta must be finite, got {beta}"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// All registered evaluators; `auto` is the default.
pub fn evaluators() -> Registry<dyn MittagLeffler> {
    let mut reg: Registry<dyn MittagLeffler> = Registry::new("Mittag-Leffler evaluator");
    reg.register("auto", || Arc::new(Composite::default()))
        .register("series", || Arc::new(Series))
        .register("asymptotic", || Arc::new(Asymptotic))
        .register("integral", || Arc::new(RealAxisIntegral));
    reg
}

/// `E_{alpha,beta}(z)` for `z <= 0` with the default evaluator.
pub fn mlf(p: MlParams, z: f64) -> Result<f64> {
    mlf_with(&Composite::default(), p, z)
}

pub fn mlf_with(eval: &dyn MittagLeffler, p: MlParams, z: f64) -> Result<f64> {
    if !(z <= 0.0) {
        return domain(format!("only z <= 0 is supported, got {z}"));
    }
    eval.eval_neg(p.alpha, p.beta, -z)
}

/// `\int_a^b s^{alpha-1} E_{alpha,alpha}(-lambda s^alpha) ds`, in closed form
/// `(E_{alpha,1}(-lambda a^alpha) - E_{alpha,1}(-lambda b^alpha)) / lambda`.
pub fn ml_decay_integral(alpha: f64, lambda: f64, a: f64, b: f64) -> Result<f64> {
    ml_decay_integral_with(&Composite::default(), alpha, lambda, a, b)
}

pub fn ml_decay_integral_with(
    eval: &dyn MittagLeffler,
    alpha: f64,
    lambda: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(a >= 0.0) || !(b >= a) {
        return domain(format!("need 0 <= a <= b, got a = {a}, b = {b}"));
    }
    if a == b {
        return Ok(0.0);
    }
    let ea = eval.eval_neg(alpha, 1.0, lambda * a.powf(alpha))?;
    let eb = eval.eval_neg(alpha, 1.0, lambda * b.powf(alpha))?;
    Ok((ea - eb) / lambda)
}

/// Uniform grid on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    t_final: f64,
}

impl TimeGrid {
    /// `count >= 2` equally spaced nodes from 0 to `t_final` inclusive.
    pub fn uniform(t_final: f64, count: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return invalid(format!("final time must be positive, got {t_final}"));
        }
        if count < 2 {
            return invalid("a time grid needs at least two nodes");
        }
        let h = t_final / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|j| j as f64 * h).collect();
        nodes[count - 1] = t_final;
        Ok(Self { nodes, t_final })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.t_final / (self.nodes.len() - 1) as f64
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Same span with the step halved.
    pub fn refined(&self) -> Self {
        Self::uniform(self.t_final, 2 * self.nodes.len() - 1).expect("refining a valid grid")
    }
}

/// Riemann-Liouville integral `I^alpha g` at every node, by product
/// integration: `g` is replaced by its piecewise-linear interpolant, which is
/// integrated exactly against `(t - s)^{alpha-1} / Gamma(alpha)`.
pub fn rl_integral(alpha: f64, g: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if g.len() != grid.len() {
        return invalid(format!(
            "function has {} samples but the grid has {} nodes",
            g.len(),
            grid.len()
        ));
    }
    let n = g.len();
    let a1 = alpha + 1.0;
    let scale = grid.step().powf(alpha) * gamma::rgamma(alpha + 2.0);
    // pw[m] = m^{alpha+1}
    let pw: Vec<f64> = (0..=n).map(|m| (m as f64).powf(a1)).collect();
    let mut out = vec![0.0; n];
    for j in 1..n {
        let jf = j as f64;
        let mut acc = ((jf - 1.0).powf(a1) - (jf - 1.0 - alpha) * jf.powf(alpha)) * g[0];
        for (i, gi) in g.iter().enumerate().take(j).skip(1) {
            let m = j - i;
            acc += (pw[m + 1] - 2.0 * pw[m] + pw[m - 1]) * gi;
        }
        acc += g[j];
        out[j] = scale * acc;
    }
    Ok(out)
}

/// One row of the built-in reference table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValue {
    pub alpha: f64,
    pub beta: f64,
    pub z: f64,
    pub value: f64,
}

const REFERENCE_SWEEP: &str = include_str!("reference_sweep.csv");

/// High-precision values of `E_{alpha,beta}(z)` for `alpha, beta` in
/// `{0.5, 0.6, 0.7, 0.8, 1}` and `z = 0, -1, ..., -100`.
pub fn reference_sweep() -> Vec<ReferenceValue> {
    REFERENCE_SWEEP
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<f64> = line
                .split(',')
                .map(|v| v.parse().expect("embedded reference table is well formed"))
                .collect();
            ReferenceValue {
                alpha: f[0],
                beta: f[1],
                z: f[2],
                value: f[3],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_is_complete() {
        let rows = reference_sweep();
        assert_eq!(rows.len(), 25 * 101);
        assert!(rows.iter().all(|r| r.value.is_finite() && r.z <= 0.0));
    }

    #[test]
    fn trivial_values() {
        let p = MlParams::new(0.5, 1.0).unwrap();
        assert_eq!(mlf(p, 0.0).unwrap(), 1.0);
        let e = mlf(MlParams::new(1.0, 1.0).unwrap(), -1.0).unwrap();
        assert!((e - 0.367_879_441_171_442_3).abs() < 1e-15);
        let x = std::f64::consts::FRAC_PI_2;
        let c = mlf(MlParams::new(2.0, 1.0).unwrap(), -x * x).unwrap();
        assert!(c.abs() < 1e-12, "{c}");
    }

    #[test]
    fn domain_errors() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(-1.0, 1.0).is_err());
        assert!(MlParams::new(0.5, f64::NAN).is_err());
        let p = MlParams::new(0.5, 1.0).unwrap();
        assert!(mlf(p, 0.1).is_err());
        assert!(ml_decay_integral(0.5, 1.0, 1.0, 0.5).is_err());
        assert!(ml_decay_integral(0.5, 0.0, 0.0, 0.5).is_err());
        assert!(ml_decay_integral(0.5, -2.0, 0.0, 0.5).is_err());
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        assert!(rl_integral(1.2, &[0.0; 5], &grid).is_err());
        assert!(rl_integral(0.0, &[0.0; 5], &grid).is_err());
    }

    #[test]
    fn decay_integral_empty_interval_and_exponential_case() {
        assert_eq!(ml_decay_integral(0.4, 3.0, 0.7, 0.7).unwrap(), 0.0);
        let v = ml_decay_integral(1.0, 2.0, 0.0, 1.0).unwrap();
        assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((v - 0.432_332_36).abs() < 1e-8);
    }

    #[test]
    fn rl_integral_power_rule() {
        let grid = TimeGrid::uniform(1.0, 41).unwrap();
        for &alpha in &[0.3, 0.5, 0.9, 1.0] {
            let ones = vec![1.0; grid.len()];
            let got = rl_integral(alpha, &ones, &grid).unwrap();
            assert_eq!(got[0], 0.0);
            for (t, v) in grid.nodes().iter().zip(&got) {
                let exact = t.powf(alpha) * gamma::rgamma(alpha + 1.0);
                assert!((v - exact).abs() < 1e-13, "alpha {alpha} t {t}: {v} vs {exact}");
            }
        }
        // Linear data is reproduced exactly as well.
        let lin: Vec<f64> = grid.nodes().to_vec();
        let got = rl_integral(0.5, &lin, &grid).unwrap();
        assert!((got[40] - gamma::rgamma(2.5)).abs() < 1e-13);
        assert!((got[40] - 0.752_252_78).abs() < 1e-8);
    }

    #[test]
    fn grid_refinement_keeps_span() {
        let g = TimeGrid::uniform(2.0, 5).unwrap().refined();
        assert_eq!(g.len(), 9);
        assert_eq!(g.nodes()[8], 2.0);
        assert!((g.step() - 0.25).abs() < 1e-15);
    }
}
