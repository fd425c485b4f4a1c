//! Spectral solution of the space-time fractional diffusion problem
//!
//! ```text
//! d_t^alpha (u - phi) + A^beta u = f(x) mu(t),   u = 0 on the boundary,
//! ```
//!
//! written as a sum over eigenmodes. The source convolution is evaluated by
//! product integration: `mu` is held constant on each time cell (midpoint
//! value) and the relaxation kernel is integrated exactly over the cell.

use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::mlf::gamma::{gamma, rgamma};
use crate::mlf::{Composite, MittagLeffler, TimeGrid};
use crate::spectral::{eigenfunction_samples, expand, Eigensystem, SpaceGrid};

/// Everything the solver needs apart from the data `phi`, `f`, `mu`.
#[derive(Clone)]
pub struct ProblemConfig {
    alpha: f64,
    es: Arc<dyn Eigensystem>,
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
}

impl std::fmt::Debug for ProblemConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemConfig")
            .field("alpha", &self.alpha)
            .field("beta", &self.es.beta())
            .field("modes", &self.es.mode_count())
            .field("space_nodes", &self.sgrid.len())
            .field("time_nodes", &self.tgrid.len())
            .finish()
    }
}

impl ProblemConfig {
    /// `alpha = 1` selects the classical (exponential) kernel exactly.
    pub fn new(
        alpha: f64,
        es: Arc<dyn Eigensystem>,
        sgrid: SpaceGrid,
        tgrid: TimeGrid,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        let beta = es.beta();
        if !(beta > 0.0 && beta <= 1.0) {
            return invalid(format!("beta must lie in (0, 1], got {beta}"));
        }
        if 4 * es.mode_count() > sgrid.len() {
            return invalid(format!(
                "{} modes need at least {} spatial nodes",
                es.mode_count(),
                4 * es.mode_count()
            ));
        }
        Ok(Self {
            alpha,
            es,
            sgrid,
            tgrid,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.es.beta()
    }

    pub fn eigensystem(&self) -> &dyn Eigensystem {
        self.es.as_ref()
    }

    pub fn sgrid(&self) -> &SpaceGrid {
        &self.sgrid
    }

    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    pub fn t_final(&self) -> f64 {
        self.tgrid.t_final()
    }

    /// Same problem on a time grid with half the step.
    pub fn with_tgrid(&self, tgrid: TimeGrid) -> Self {
        Self {
            tgrid,
            ..self.clone()
        }
    }
}

/// Time profile `mu` of the source.
#[derive(Debug, Clone, PartialEq)]
pub enum TemporalSource {
    /// `value` on `(0, t0)`, zero afterwards.
    ConstantUntil { value: f64, t0: f64 },
    /// `sum_k c_k t^{p_k}` given as `(c_k, p_k)` pairs, `p_k > -1`.
    Polynomial(Vec<(f64, f64)>),
    /// Values at the time nodes, linearly interpolated.
    Sampled(Vec<f64>),
}

impl TemporalSource {
    pub fn zero() -> Self {
        Self::Polynomial(Vec::new())
    }

    /// `t^{1-alpha} / Gamma(2-alpha)`, whose Abel preimage is identically 1.
    pub fn unit_theta(alpha: f64) -> Self {
        Self::Polynomial(vec![(rgamma(2.0 - alpha), 1.0 - alpha)])
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::ConstantUntil { value, t0 } => {
                if t > 0.0 && t < *t0 {
                    *value
                } else {
                    0.0
                }
            }
            Self::Polynomial(terms) => terms.iter().map(|&(c, p)| c * t.powf(p)).sum(),
            Self::Sampled(_) => f64::NAN,
        }
    }

    fn validate(&self, tgrid: &TimeGrid) -> Result<()> {
        match self {
            Self::ConstantUntil { value, t0 } => {
                if !value.is_finite() || !(*t0 > 0.0 && *t0 <= tgrid.t_final()) {
                    return invalid(format!(
                        "constant source needs finite value and 0 < T0 <= T, got value {value}, T0 {t0}"
                    ));
                }
            }
            Self::Polynomial(terms) => {
                if terms
                    .iter()
                    .any(|&(c, p)| !c.is_finite() || !(p > -1.0) || !p.is_finite())
                {
                    return invalid("polynomial source needs finite coefficients and powers > -1");
                }
            }
            Self::Sampled(v) => {
                if v.len() != tgrid.len() {
                    return invalid(format!(
                        "sampled source has {} values but the time grid has {} nodes",
                        v.len(),
                        tgrid.len()
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("sampled source"));
                }
            }
        }
        Ok(())
    }

    /// Representative value on each time cell.
    fn cell_values(&self, tgrid: &TimeGrid) -> Vec<f64> {
        let t = tgrid.nodes();
        match self {
            Self::Sampled(v) => v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            _ => t.windows(2).map(|w| self.eval(0.5 * (w[0] + w[1]))).collect(),
        }
    }

    /// `theta` with `I^{1-alpha} theta = mu`, as `(c, q)` pairs of
    /// `c t^q`, when it is available in closed form.
    pub fn theta(&self, alpha: f64, t_final: f64) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Polynomial(terms) => terms
                .iter()
                .map(|&(c, p)| {
                    let q = p + alpha - 1.0;
                    (q > -1.0).then(|| (c * gamma(p + 1.0) * rgamma(p + alpha), q))
                })
                .collect(),
            Self::ConstantUntil { value, t0 } if *t0 >= t_final => {
                Some(vec![(value * rgamma(1.0 - alpha), -alpha)])
            }
            _ => None,
        }
    }
}

/// Values on the space-time grid; row `i` is `x_i`, column `j` is `t_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    values: DMatrix<f64>,
    xs: Vec<f64>,
    ts: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(values: DMatrix<f64>, xs: Vec<f64>, ts: Vec<f64>) -> Result<Self> {
        if values.nrows() != xs.len() || values.ncols() != ts.len() {
            return invalid(format!(
                "field is {}x{} but the grids are {}x{}",
                values.nrows(),
                values.ncols(),
                xs.len(),
                ts.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("space-time field"));
        }
        Ok(Self { values, xs, ts })
    }

    pub fn zeros(sgrid: &SpaceGrid, tgrid: &TimeGrid) -> Self {
        Self {
            values: DMatrix::zeros(sgrid.len(), tgrid.len()),
            xs: sgrid.nodes().to_vec(),
            ts: tgrid.nodes().to_vec(),
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Values at time node `j`.
    pub fn snapshot(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.values - &other.values).amax()
    }

    /// `L^2(Omega x (0,T))` norm: Simpson in space, trapezoid in time.
    pub fn l2_norm(&self) -> f64 {
        let m = self.xs.len();
        let n = self.ts.len();
        let hx = (self.xs[m - 1] - self.xs[0]) / (m - 1) as f64;
        let ht = (self.ts[n - 1] - self.ts[0]) / (n - 1) as f64;
        let mut total = 0.0;
        for j in 0..n {
            let wt = if j == 0 || j == n - 1 { 0.5 * ht } else { ht };
            let mut col = 0.0;
            for i in 0..m {
                let c = if i == 0 || i == m - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = self.values[(i, j)];
                col += c * v * v;
            }
            total += wt * col * hx / 3.0;
        }
        total.sqrt()
    }

    /// Header `x/t,t_0,...`, then one row per space node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "x/t")?;
        for t in &self.ts {
            write!(w, ",{t:e}")?;
        }
        writeln!(w)?;
        for (i, x) in self.xs.iter().enumerate() {
            write!(w, "{x:e}")?;
            for j in 0..self.ts.len() {
                write!(w, ",{:e}", self.values[(i, j)])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))??;
        let mut cells = header.split(',');
        cells.next();
        let ts = cells.map(parse_f64).collect::<Result<Vec<_>>>()?;
        let mut xs = Vec::new();
        let mut data = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
            if row.len() != ts.len() + 1 {
                return Err(Error::Parse(format!(
                    "row {} has {} values, expected {}",
                    xs.len() + 1,
                    row.len() - 1,
                    ts.len()
                )));
            }
            xs.push(row[0]);
            data.extend_from_slice(&row[1..]);
        }
        let values = DMatrix::from_row_slice(xs.len(), ts.len(), &data);
        Self::new(values, xs, ts)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

/// Per-mode time kernels for a fixed problem and source profile. Building
/// one costs `N_modes * J` Mittag-Leffler evaluations plus an `N_modes * J^2`
/// convolution; each subsequent [`ForwardSolver::solve`] is a dense product.
pub struct ForwardSolver {
    cfg: ProblemConfig,
    mu: TemporalSource,
    /// `N x M`: eigenfunctions at the space nodes, boundary pinned to zero.
    phi: DMatrix<f64>,
    /// `N x J`: `E_{alpha,1}(-lambda_n^beta t_j^alpha)`.
    relax: DMatrix<f64>,
    /// `N x J`: source convolution for a unit coefficient.
    forced: DMatrix<f64>,
}

impl ForwardSolver {
    pub fn new(cfg: ProblemConfig, mu: TemporalSource) -> Result<Self> {
        Self::with_evaluator(cfg, mu, &Composite::default())
    }

    pub fn with_evaluator(
        cfg: ProblemConfig,
        mu: TemporalSource,
        eval: &dyn MittagLeffler,
    ) -> Result<Self> {
        mu.validate(&cfg.tgrid)?;
        let es = cfg.eigensystem();
        let modes = es.mode_count();
        let nt = cfg.tgrid.len();
        let ts = cfg.tgrid.nodes();
        let cells = mu.cell_values(&cfg.tgrid);
        let alpha = cfg.alpha;

        let kernels: Vec<(Vec<f64>, Vec<f64>)> = (1..=modes)
            .into_par_iter()
            .map(|n| -> Result<(Vec<f64>, Vec<f64>)> {
                let lambda = es.fractional_eigenvalue(n);
                // Uniform grid: t_j - t_i = t_{j-i}, so one row serves every lag.
                let h = ts
                    .iter()
                    .map(|&t| eval.eval_neg(alpha, 1.0, lambda * t.powf(alpha)))
                    .collect::<Result<Vec<f64>>>()?;
                // Exact cell weights (H(k) - H(k+1)) / lambda for lag k.
                let w: Vec<f64> = h.windows(2).map(|p| (p[0] - p[1]) / lambda).collect();
                let mut r = vec![0.0; nt];
                for (j, rj) in r.iter_mut().enumerate().skip(1) {
                    let mut acc = 0.0;
                    for (i, mi) in cells.iter().enumerate().take(j) {
                        acc += mi * w[j - i - 1];
                    }
                    *rj = acc;
                }
                Ok((h, r))
            })
            .collect::<Result<_>>()?;

        let mut relax = DMatrix::zeros(modes, nt);
        let mut forced = DMatrix::zeros(modes, nt);
        for (n, (h, r)) in kernels.iter().enumerate() {
            for j in 0..nt {
                relax[(n, j)] = h[j];
                forced[(n, j)] = r[j];
            }
        }
        if relax.iter().chain(forced.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forward kernels"));
        }

        let m = cfg.sgrid.len();
        let mut phi = DMatrix::zeros(modes, m);
        for n in 0..modes {
            for (i, v) in eigenfunction_samples(es, n + 1, &cfg.sgrid).into_iter().enumerate() {
                phi[(n, i)] = v;
            }
        }
        Ok(Self {
            cfg,
            mu,
            phi,
            relax,
            forced,
        })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.cfg
    }

    pub fn source(&self) -> &TemporalSource {
        &self.mu
    }

    /// `u` from sampled initial value `phi` and source shape `f`.
    pub fn solve(&self, phi: &[f64], f: &[f64]) -> Result<SpaceTimeField> {
        let es = self.cfg.eigensystem();
        let p = expand(phi, es, &self.cfg.sgrid)?;
        let fc = expand(f, es, &self.cfg.sgrid)?;
        self.solve_modal(&p, &fc)
    }

    /// `u` from eigen-coefficients of `phi` and `f`.
    pub fn solve_modal(&self, phi: &[f64], f: &[f64]) -> Result<SpaceTimeField> {
        let modes = self.cfg.eigensystem().mode_count();
        if phi.len() != modes || f.len() != modes {
            return invalid(format!("expected {modes} coefficients per input"));
        }
        let mut coeffs = DMatrix::<f64>::zeros(modes, self.cfg.tgrid.len());
        for n in 0..modes {
            for j in 0..coeffs.ncols() {
                coeffs[(n, j)] = phi[n] * self.relax[(n, j)] + f[n] * self.forced[(n, j)];
            }
        }
        self.synthesize_modal(&coeffs)
    }

    /// Space-time field from per-mode time coefficients (`N x J`).
    fn synthesize_modal(&self, coeffs: &DMatrix<f64>) -> Result<SpaceTimeField> {
        let values = self.phi.tr_mul(coeffs);
        SpaceTimeField::new(
            values,
            self.cfg.sgrid.nodes().to_vec(),
            self.cfg.tgrid.nodes().to_vec(),
        )
    }

    /// Time kernels of mode `n` (1-based): relaxation and unit-source response.
    pub fn mode_kernels(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.relax.row(n - 1).iter().copied().collect(),
            self.forced.row(n - 1).iter().copied().collect(),
        )
    }
}

/// One-shot convenience wrapper around [`ForwardSolver`].
pub fn solve(
    cfg: &ProblemConfig,
    phi: &[f64],
    f: &[f64],
    mu: &TemporalSource,
) -> Result<SpaceTimeField> {
    ForwardSolver::new(cfg.clone(), mu.clone())?.solve(phi, f)
}

/// Sub-steps per time cell used for the Duhamel convolution; `v` behaves
/// like `t^alpha` near zero, which linear interpolation resolves slowly.
const DUHAMEL_REFINE: usize = 8;

/// Relative `L^2(Omega x (0,T))` gap between the direct source solution and
/// its Duhamel reconstruction `w(t) = int_0^t theta(t-s) v(s) ds`, where `v`
/// solves the homogeneous problem with initial value `f` and
/// `I^{1-alpha} theta = mu`.
pub fn duhamel_check(cfg: &ProblemConfig, f: &[f64], mu: &TemporalSource) -> Result<f64> {
    duhamel_check_with(cfg, f, mu, &Composite::default())
}

pub fn duhamel_check_with(
    cfg: &ProblemConfig,
    f: &[f64],
    mu: &TemporalSource,
    eval: &dyn MittagLeffler,
) -> Result<f64> {
    let theta = mu.theta(cfg.alpha, cfg.t_final()).ok_or_else(|| {
        Error::Unsupported("no closed-form theta for this temporal source".into())
    })?;
    let direct = ForwardSolver::with_evaluator(cfg.clone(), mu.clone(), eval)?;
    let es = cfg.eigensystem();
    let fc = expand(f, es, &cfg.sgrid)?;
    let u = direct.solve_modal(&vec![0.0; fc.len()], &fc)?;

    // v is modal: v_n(s) = f_n E_{alpha,1}(-lambda_n^beta s^alpha). Its linear
    // interpolant on the fine grid is integrated exactly against theta:
    // w(t) = sum_k a_k v(t - s_k) + b_k v(t - s_{k+1}).
    let nt = cfg.tgrid.len();
    let nf = (nt - 1) * DUHAMEL_REFINE + 1;
    let fine = TimeGrid::uniform(cfg.t_final(), nf)?;
    let h = fine.step();
    let moment = |q: f64, lo: f64, hi: f64| (hi.powf(q + 1.0) - lo.powf(q + 1.0)) / (q + 1.0);
    let mut a = vec![0.0; nf];
    let mut b = vec![0.0; nf];
    for k in 0..nf - 1 {
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        for &(c, q) in &theta {
            let m0 = moment(q, lo, hi);
            let m1 = moment(q + 1.0, lo, hi);
            a[k] += c * (hi * m0 - m1) / h;
            b[k] += c * (m1 - lo * m0) / h;
        }
    }
    let alpha = cfg.alpha;
    let rows: Vec<Vec<f64>> = fc
        .par_iter()
        .enumerate()
        .map(|(n, &c)| -> Result<Vec<f64>> {
            let mut w = vec![0.0; nt];
            if c == 0.0 {
                return Ok(w);
            }
            let lambda = es.fractional_eigenvalue(n + 1);
            let v = fine
                .nodes()
                .iter()
                .map(|&t| eval.eval_neg(alpha, 1.0, lambda * t.powf(alpha)))
                .collect::<Result<Vec<f64>>>()?;
            for (j, wj) in w.iter_mut().enumerate().skip(1) {
                let jf = j * DUHAMEL_REFINE;
                let mut acc = 0.0;
                for k in 0..jf {
                    acc += a[k] * v[jf - k] + b[k] * v[jf - k - 1];
                }
                *wj = c * acc;
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    let mut coeffs = DMatrix::<f64>::zeros(fc.len(), nt);
    for (n, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            coeffs[(n, j)] = *v;
        }
    }
    let w = direct.synthesize_modal(&coeffs)?;
    let scale = u.l2_norm();
    let gap = SpaceTimeField {
        values: &w.values - &u.values,
        ..w
    }
    .l2_norm();
    if scale == 0.0 {
        return Ok(gap);
    }
    Ok(gap / scale)
}
