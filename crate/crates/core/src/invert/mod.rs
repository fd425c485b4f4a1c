//! Levenberg-Marquardt reconstruction of the spatial source `f` outside the
//! observation window, from noisy interior data.
//!
//! The forward operator `F: f -> u|_{omega x (T1,T)}` (zero initial value) is
//! linear, so its finite-difference Jacobian is exact up to rounding and is
//! computed once unless [`LmSettings::recompute_jacobian`] is set.

mod basis;
mod trace;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use basis::{
    bases, BasisFamily, HatBasis, HatFamily, PiecewiseConstantBasis, PiecewiseConstantFamily,
    SourceBasis,
};
pub use trace::{Reconstruction, TraceRow};

use crate::error::{invalid, Error, Result};
use crate::forward::ForwardSolver;
use crate::observe::{restrict, ObservationData, ObservationWindow};
use crate::spectral::{expand, norm_on, Region, SpaceGrid};

/// Iteration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LmSettings {
    /// Steepness of the regularization schedule.
    pub gamma0: f64,
    /// Centre of the regularization schedule.
    pub k0: f64,
    /// Discrepancy factor, `> 1`.
    pub eta: f64,
    pub k_max: usize,
    /// Finite-difference step.
    pub tau: f64,
    pub recompute_jacobian: bool,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            gamma0: 0.8,
            k0: 4.0,
            eta: 1.01,
            k_max: 40,
            tau: 1e-3,
            recompute_jacobian: false,
        }
    }
}

impl LmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) || !self.k0.is_finite() {
            return invalid("gamma0 must be positive and k0 finite");
        }
        if !(self.eta > 1.0) {
            return invalid(format!("eta must exceed 1, got {}", self.eta));
        }
        if !(self.tau > 0.0) {
            return invalid(format!("fd step must be positive, got {}", self.tau));
        }
        if self.k_max == 0 {
            return invalid("the iteration cap must be at least 1");
        }
        Ok(())
    }
}

/// `rho_k = 1 / (1 + exp(gamma0 (k - k0)))`.
pub fn rho_schedule(k: usize, s: &LmSettings) -> f64 {
    1.0 / (1.0 + (s.gamma0 * (k as f64 - s.k0)).exp())
}

/// Coefficients over a basis.
#[derive(Clone)]
pub struct SourceModel {
    basis: Arc<dyn SourceBasis>,
    a: Vec<f64>,
}

impl std::fmt::Debug for SourceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceModel")
            .field("basis", &self.basis.name())
            .field("a", &self.a)
            .finish()
    }
}

impl SourceModel {
    pub fn new(basis: Arc<dyn SourceBasis>, a: Vec<f64>) -> Result<Self> {
        if a.len() != basis.len() {
            return invalid(format!(
                "{} coefficients for a basis of {} functions",
                a.len(),
                basis.len()
            ));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("source coefficients"));
        }
        Ok(Self { basis, a })
    }

    pub fn zero(basis: Arc<dyn SourceBasis>) -> Self {
        let n = basis.len();
        Self {
            basis,
            a: vec![0.0; n],
        }
    }

    pub fn basis(&self) -> &Arc<dyn SourceBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn sample(&self, grid: &SpaceGrid) -> Vec<f64> {
        self.basis.combine(&self.a, grid)
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Discrepancy,
    IterationCap,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Discrepancy => "discrepancy",
            Self::IterationCap => "iteration-cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub a: Vec<f64>,
    /// `E_k = ||F(a^k) - u^delta||`.
    pub residual: f64,
    /// Regularization weight used to produce `a^k`.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionTrace {
    pub initial_residual: f64,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl InversionTrace {
    /// Stopping index `K`.
    pub fn stopping_index(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    /// `E_0, E_1, ..., E_K`.
    pub fn residuals(&self) -> Vec<f64> {
        std::iter::once(self.initial_residual)
            .chain(self.records.iter().map(|r| r.residual))
            .collect()
    }

    /// CSV rows, with `err` computed from each iterate's coefficients.
    pub fn rows(&self, mut err: impl FnMut(&[f64]) -> f64) -> Vec<TraceRow> {
        self.records
            .iter()
            .map(|r| TraceRow {
                k: r.k,
                residual: r.residual,
                rho: r.rho,
                err: err(&r.a),
            })
            .collect()
    }
}

/// First `k >= 1` with `E_k <= eta delta`, for `residuals = (E_1, E_2, ...)`.
pub fn stopping_index(residuals: &[f64], delta: f64, eta: f64) -> Option<usize> {
    residuals.iter().position(|&e| e <= eta * delta).map(|i| i + 1)
}

/// Observation-shaped sensitivities `dF/da_n`, one column per basis function,
/// with observation samples flattened column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    columns: DMatrix<f64>,
}

impl Jacobian {
    pub fn from_columns(columns: DMatrix<f64>) -> Self {
        Self { columns }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }
}

/// Forward operator from basis coefficients to window observations, with
/// zero initial value.
pub struct InverseProblem {
    solver: ForwardSolver,
    window: ObservationWindow,
    basis: Arc<dyn SourceBasis>,
    /// Eigen-coefficients of each `chi_n`.
    chi_modal: Vec<Vec<f64>>,
}

impl InverseProblem {
    pub fn new(
        solver: ForwardSolver,
        window: ObservationWindow,
        basis: Arc<dyn SourceBasis>,
    ) -> Result<Self> {
        let cfg = solver.config();
        let chi_modal = (0..basis.len())
            .map(|n| expand(&basis.sample(n, cfg.sgrid()), cfg.eigensystem(), cfg.sgrid()))
            .collect::<Result<_>>()?;
        // Fail early if the window misses the grid.
        let zero = vec![0.0; cfg.eigensystem().mode_count()];
        restrict(&solver.solve_modal(&zero, &zero)?, &window)?;
        Ok(Self {
            solver,
            window,
            basis,
            chi_modal,
        })
    }

    pub fn solver(&self) -> &ForwardSolver {
        &self.solver
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn basis(&self) -> &Arc<dyn SourceBasis> {
        &self.basis
    }

    /// Region on which the source is reconstructed.
    pub fn support(&self) -> &Region {
        self.basis.support()
    }

    /// Noiseless data for the sampled source `f`.
    pub fn observe(&self, f: &[f64]) -> Result<ObservationData> {
        let zero = vec![0.0; f.len()];
        restrict(&self.solver.solve(&zero, f)?, &self.window)
    }

    /// `F(sum_n a_n chi_n)`.
    pub fn forward_map(&self, a: &[f64]) -> Result<ObservationData> {
        if a.len() != self.basis.len() {
            return invalid(format!(
                "{} coefficients for a basis of {} functions",
                a.len(),
                self.basis.len()
            ));
        }
        let modes = self.chi_modal.first().map_or(0, Vec::len);
        let mut fc = vec![0.0; modes];
        for (an, chi) in a.iter().zip(&self.chi_modal) {
            for (c, x) in fc.iter_mut().zip(chi) {
                *c += an * x;
            }
        }
        let u = self.solver.solve_modal(&vec![0.0; modes], &fc)?;
        restrict(&u, &self.window)
    }

    /// Forward differences `(F(a + tau e_n) - F(a)) / tau`.
    pub fn jacobian_fd(&self, a: &[f64], tau: f64) -> Result<Jacobian> {
        if !(tau > 0.0) {
            return invalid(format!("fd step must be positive, got {tau}"));
        }
        let base = self.forward_map(a)?;
        let cols: Vec<Vec<f64>> = (0..a.len())
            .into_par_iter()
            .map(|n| -> Result<Vec<f64>> {
                let mut ap = a.to_vec();
                ap[n] += tau;
                let up = self.forward_map(&ap)?;
                Ok(up
                    .samples()
                    .iter()
                    .zip(base.samples().iter())
                    .map(|(p, b)| (p - b) / tau)
                    .collect())
            })
            .collect::<Result<_>>()?;
        let rows = base.samples().len();
        let m = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("jacobian"));
        }
        Ok(Jacobian { columns: m })
    }

    /// Flattened window quadrature weights matching the Jacobian rows.
    pub fn weights(&self, data: &ObservationData) -> DVector<f64> {
        let (wx, wt) = data.weights();
        let mut w = DVector::zeros(wx.len() * wt.len());
        for (j, b) in wt.iter().enumerate() {
            for (i, a) in wx.iter().enumerate() {
                w[i + j * wx.len()] = a * b;
            }
        }
        w
    }

    /// Runs the iteration from `a0` against `data`.
    pub fn run(
        &self,
        data: &ObservationData,
        s: &LmSettings,
        a0: &[f64],
    ) -> Result<(SourceModel, InversionTrace)> {
        s.validate()?;
        let target = DVector::from_column_slice(data.samples().as_slice());
        let w = self.weights(data);
        let gram = self.basis.gram();
        let misfit = |a: &[f64]| -> Result<(DVector<f64>, f64)> {
            let fa = self.forward_map(a)?;
            if fa.samples().shape() != data.samples().shape() {
                return invalid("data and model observations differ in shape");
            }
            let r = &target - DVector::from_column_slice(fa.samples().as_slice());
            let e = r.iter().zip(w.iter()).map(|(r, w)| w * r * r).sum::<f64>().sqrt();
            Ok((r, e))
        };

        let mut a = a0.to_vec();
        let (mut r, e0) = misfit(&a)?;
        let delta = data.delta();
        let mut trace = InversionTrace {
            initial_residual: e0,
            records: Vec::new(),
            stop: StopReason::IterationCap,
        };
        if delta > 0.0 && e0 <= s.eta * delta {
            trace.stop = StopReason::Discrepancy;
            return Ok((SourceModel::new(self.basis.clone(), a)?, trace));
        }
        let mut jac = self.jacobian_fd(&a, s.tau)?;
        for k in 0..s.k_max {
            if s.recompute_jacobian && k > 0 {
                jac = self.jacobian_fd(&a, s.tau)?;
            }
            let rho = rho_schedule(k + 1, s);
            let step = lm_step(&jac, &r, &w, &gram, rho)?;
            for (ai, d) in a.iter_mut().zip(step.iter()) {
                *ai += d;
            }
            let (rn, e) = misfit(&a)?;
            r = rn;
            trace.records.push(IterationRecord {
                k: k + 1,
                a: a.clone(),
                residual: e,
                rho,
            });
            if !e.is_finite() || e > 10.0 * e0 {
                return Err(Error::Divergence {
                    step: k + 1,
                    residual: e,
                    initial: e0,
                });
            }
            if delta > 0.0 && e <= s.eta * delta {
                trace.stop = StopReason::Discrepancy;
                break;
            }
        }
        Ok((SourceModel::new(self.basis.clone(), a)?, trace))
    }

    /// `||f - f_true|| / ||f_true||` on the reconstruction support.
    pub fn relative_error(&self, m: &SourceModel, f_true: &[f64]) -> Result<f64> {
        let grid = self.solver.config().sgrid();
        relative_error(&m.sample(grid), f_true, self.basis.support(), grid)
    }
}

/// `||f - f_true||_{L^2(region)} / ||f_true||_{L^2(region)}`.
pub fn relative_error(f: &[f64], f_true: &[f64], region: &Region, grid: &SpaceGrid) -> Result<f64> {
    if f.len() != f_true.len() {
        return invalid("reconstruction and reference have different lengths");
    }
    let denom = norm_on(region, f_true, grid)?;
    if denom == 0.0 {
        return invalid("the reference source vanishes on the reconstruction support");
    }
    let diff: Vec<f64> = f.iter().zip(f_true).map(|(a, b)| a - b).collect();
    Ok(norm_on(region, &diff, grid)? / denom)
}

/// Solves `(Q + A) x = b` for symmetric positive definite `Q + A`.
pub fn solve_normal(q: &DMatrix<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let m = q + a;
    if m.nrows() != b.len() || !m.is_square() {
        return invalid("normal equations have inconsistent shapes");
    }
    match m.clone().cholesky() {
        Some(ch) => {
            let x = ch.solve(b);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Factorization {
                    condition: condition_estimate(&m),
                });
            }
            Ok(x)
        }
        None => Err(Error::Factorization {
            condition: condition_estimate(&m),
        }),
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let ev = m.clone().symmetric_eigen().eigenvalues;
    let max = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// One regularized Gauss-Newton update: solves
/// `(J^T W J + rho G) da = J^T W r`, where `W` holds the window quadrature
/// weights and `G` the basis Gram matrix.
pub fn lm_step(
    jac: &Jacobian,
    r: &DVector<f64>,
    w: &DVector<f64>,
    gram: &DMatrix<f64>,
    rho: f64,
) -> Result<DVector<f64>> {
    let j = &jac.columns;
    if j.nrows() != r.len() || w.len() != r.len() {
        return invalid("jacobian, residual and weights disagree in length");
    }
    let mut wj = j.clone();
    for (mut row, wi) in wj.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    let q = j.tr_mul(&wj);
    let b = wj.tr_mul(r);
    solve_normal(&q, &(gram * rho), &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let s = LmSettings::default();
        assert_eq!(rho_schedule(4, &s), 0.5);
        assert!((rho_schedule(1, &s) - 0.916_827_303_506_9).abs() < 1e-12);
        assert!(rho_schedule(50, &s) < 1e-15);
        assert!((1..40).all(|k| rho_schedule(k + 1, &s) < rho_schedule(k, &s)));
    }

    #[test]
    fn stopping_rule() {
        assert_eq!(stopping_index(&[0.5, 0.02, 0.009], 0.01, 1.01), Some(3));
        assert_eq!(stopping_index(&[0.5, 0.0101, 0.009], 0.01, 1.01), Some(2));
        assert_eq!(stopping_index(&[0.5, 0.02], 0.01, 1.01), None);
    }

    #[test]
    fn normal_equation_examples() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let x = solve_normal(&q, &DMatrix::identity(2, 2), &DVector::from_vec(vec![3.0, 2.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15, "{x}");

        let j = Jacobian::from_columns(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, -1.0]));
        let r = DVector::from_vec(vec![0.5, 0.25, 1.0]);
        let w = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let g = DMatrix::from_element(1, 1, 0.7);
        let dx = lm_step(&j, &r, &w, &g, 0.4).unwrap();
        let qq = 0.1 + 0.2 * 4.0 + 0.3;
        let ww = 0.1 * 0.5 + 0.2 * 2.0 * 0.25 - 0.3;
        assert!((dx[0] - ww / (qq + 0.4 * 0.7)).abs() < 1e-15);

        let zero = lm_step(&j, &DVector::zeros(3), &w, &g, 0.4).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn singular_system_reports_condition() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = solve_normal(&q, &DMatrix::zeros(2, 2), &DVector::from_vec(vec![1.0, 0.0]));
        match err {
            Err(Error::Factorization { condition }) => assert!(condition > 1e12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn settings_validation() {
        assert!(LmSettings::default().validate().is_ok());
        let bad = LmSettings {
            eta: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LmSettings {
            k_max: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
