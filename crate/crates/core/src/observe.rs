//! Interior observations `u|_{omega x (T1, T)}`, multiplicative noise and the
//! space-time `L^2` norm on the observation window.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::forward::SpaceTimeField;
use crate::registry::Registry;
use crate::spectral::Subdomain;

/// `omega x (t1, t_final)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationWindow {
    omega: Subdomain,
    t1: f64,
    t_final: f64,
}

impl ObservationWindow {
    pub fn new(omega: Subdomain, t1: f64, t_final: f64) -> Result<Self> {
        if !(t1 > 0.0 && t1 < t_final) || !t_final.is_finite() {
            return invalid(format!("need 0 < T1 < T, got T1 = {t1}, T = {t_final}"));
        }
        Ok(Self { omega, t1, t_final })
    }

    pub fn omega(&self) -> &Subdomain {
        &self.omega
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }
}

/// Samples on the sub-grid inside a window, with the noise that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationData {
    window: ObservationWindow,
    xs: Vec<f64>,
    ts: Vec<f64>,
    samples: DMatrix<f64>,
    delta: f64,
    epsilon: f64,
    seed: Option<u64>,
    noise_model: Option<String>,
}

/// Index of the grid node nearest to `v` on a uniform grid starting at zero.
fn snap(v: f64, step: f64, last: usize) -> usize {
    ((v / step).round().max(0.0) as usize).min(last)
}

/// Restricts `u` to the nodes with `x` in `[left, right)` (closed at the
/// domain end `x = 1`) and `t` in `(T1, T]`, after snapping the window edges
/// to the nearest nodes.
pub fn restrict(u: &SpaceTimeField, w: &ObservationWindow) -> Result<ObservationData> {
    let (xs, ts) = (u.xs(), u.ts());
    let (mx, mt) = (xs.len() - 1, ts.len() - 1);
    let hx = (xs[mx] - xs[0]) / mx as f64;
    let ht = (ts[mt] - ts[0]) / mt as f64;
    if w.t_final > ts[mt] + 0.5 * ht {
        return invalid(format!(
            "window ends at {} beyond the field's final time {}",
            w.t_final, ts[mt]
        ));
    }
    let il = snap(w.omega.left(), hx, mx);
    let ir = snap(w.omega.right(), hx, mx);
    let i_end = if ir == mx { mx + 1 } else { ir };
    let jl = snap(w.t1, ht, mt);
    let jr = snap(w.t_final, ht, mt);
    if il >= i_end || jl >= jr {
        return invalid("the observation window contains no grid nodes");
    }
    let samples = u.values().view((il, jl + 1), (i_end - il, jr - jl)).into_owned();
    Ok(ObservationData {
        window: *w,
        xs: xs[il..i_end].to_vec(),
        ts: ts[jl + 1..=jr].to_vec(),
        samples,
        delta: 0.0,
        epsilon: 0.0,
        seed: None,
        noise_model: None,
    })
}

impl ObservationData {
    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn noise_model(&self) -> Option<&str> {
        self.noise_model.as_deref()
    }

    /// Same window and nodes, different samples (e.g. a residual).
    pub fn with_samples(&self, samples: DMatrix<f64>) -> Result<Self> {
        if samples.shape() != self.samples.shape() {
            return invalid("sample matrix does not match the observation sub-grid");
        }
        Ok(Self {
            samples,
            delta: 0.0,
            epsilon: 0.0,
            seed: None,
            noise_model: None,
            ..self.clone()
        })
    }

    /// Quadrature weights of the window norm; see [`st_weights`].
    pub fn weights(&self) -> (Vec<f64>, Vec<f64>) {
        st_weights(&self.xs, &self.ts, &self.window)
    }

    /// Writes the samples in the field layout; the sidecar comes from [`Self::metadata`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let field = SpaceTimeField::new(self.samples.clone(), self.xs.clone(), self.ts.clone())?;
        field.write_csv(&mut w)
    }

    /// `key = value` metadata describing the window and the noise.
    pub fn metadata(&self) -> String {
        let mut s = String::new();
        let om = self.window.omega;
        s += &format!("omega_left = {:e}\n", om.left());
        s += &format!("omega_right = {:e}\n", om.right());
        s += &format!("t1 = {:e}\n", self.window.t1);
        s += &format!("t_final = {:e}\n", self.window.t_final);
        s += &format!("epsilon = {:e}\n", self.epsilon);
        s += &format!("delta = {:e}\n", self.delta);
        if let Some(seed) = self.seed {
            s += &format!("seed = {seed}\n");
        }
        if let Some(m) = &self.noise_model {
            s += &format!("noise_model = {m}\n");
        }
        s
    }

    pub fn read_csv<R: BufRead>(csv: R, metadata: &str) -> Result<Self> {
        let field = SpaceTimeField::read_csv(csv)?;
        let kv: BTreeMap<&str, &str> = metadata
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let num = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| Error::Parse(format!("metadata lacks `{k}`")))?
                .parse()
                .map_err(|_| Error::Parse(format!("metadata `{k}` is not a number")))
        };
        let window = ObservationWindow::new(
            Subdomain::new(num("omega_left")?, num("omega_right")?)?,
            num("t1")?,
            num("t_final")?,
        )?;
        let seed = match kv.get("seed") {
            Some(s) => Some(
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad seed `{s}`")))?,
            ),
            None => None,
        };
        Ok(Self {
            window,
            xs: field.xs().to_vec(),
            ts: field.ts().to_vec(),
            samples: field.values().clone(),
            delta: num("delta")?,
            epsilon: num("epsilon")?,
            seed,
            noise_model: kv.get("noise_model").map(|s| s.to_string()),
        })
    }
}

/// How a uniform variate `r` in `(-1, 1)` perturbs a clean value.
pub trait NoiseModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn perturb(&self, u: f64, epsilon: f64, r: f64) -> f64;
}

/// `u (1 + eps r)`: symmetric relative perturbation of size at most `eps`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetricUniform;

impl NoiseModel for SymmetricUniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn perturb(&self, u: f64, epsilon: f64, r: f64) -> f64 {
        u + epsilon * u * r
    }
}

/// `u + eps u (2 r - 1)`, taken verbatim; biased towards negative values.
#[derive(Debug, Clone, Copy, Default)]
pub struct LiteralFormula;

impl NoiseModel for LiteralFormula {
    fn name(&self) -> &'static str {
        "literal"
    }

    fn perturb(&self, u: f64, epsilon: f64, r: f64) -> f64 {
        u + epsilon * u * (2.0 * r - 1.0)
    }
}

pub fn noise_models() -> Registry<dyn NoiseModel> {
    let mut r: Registry<dyn NoiseModel> = Registry::new("noise model");
    r.register("uniform", || Arc::new(SymmetricUniform));
    r.register("literal", || Arc::new(LiteralFormula));
    r
}

/// Uniform on the open interval `(-1, 1)` from the top 53 bits.
fn symmetric_unit(rng: &mut ChaCha8Rng) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// Perturbs noiseless data with the default symmetric model.
pub fn add_noise(d: &ObservationData, epsilon: f64, seed: u64) -> Result<ObservationData> {
    add_noise_with(&SymmetricUniform, d, epsilon, seed)
}

/// Perturbs noiseless data. Variates are drawn from ChaCha8 seeded with
/// `seed`, one per sample, space index outer and time index inner.
pub fn add_noise_with(
    model: &dyn NoiseModel,
    d: &ObservationData,
    epsilon: f64,
    seed: u64,
) -> Result<ObservationData> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return invalid(format!("noise level must be >= 0, got {epsilon}"));
    }
    if d.epsilon != 0.0 {
        return invalid("data already carries noise");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = d.samples.clone();
    for i in 0..noisy.nrows() {
        for j in 0..noisy.ncols() {
            let r = symmetric_unit(&mut rng);
            noisy[(i, j)] = model.perturb(d.samples[(i, j)], epsilon, r);
        }
    }
    let diff = &noisy - &d.samples;
    let (wx, wt) = d.weights();
    let delta = weighted_norm(&diff, &wx, &wt);
    Ok(ObservationData {
        samples: noisy,
        delta,
        epsilon,
        seed: Some(seed),
        noise_model: Some(model.name().to_owned()),
        ..d.clone()
    })
}

/// One-dimensional trapezoid weights over `nodes`, extended to `[lo, hi]`
/// by linear extrapolation of the integrand over the uncovered ends.
fn edge_weights(nodes: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    if n == 1 {
        w[0] = hi - lo;
        return w;
    }
    for k in 0..n - 1 {
        let h = nodes[k + 1] - nodes[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    // Integral of the linear extrapolant over a gap of width d beyond node a,
    // with neighbour b at distance h: d/2 (2 + d/h) g_a - d^2/(2h) g_b.
    let mut extend = |a: usize, b: usize, d: f64| {
        if d > 0.0 {
            let h = (nodes[a] - nodes[b]).abs();
            w[a] += 0.5 * d * (2.0 + d / h);
            w[b] -= 0.5 * d * d / h;
        }
    };
    extend(0, 1, nodes[0] - lo);
    extend(n - 1, n - 2, hi - nodes[n - 1]);
    w
}

/// Tensor-product weights `(w_x, w_t)` such that
/// `sum_ij w_x[i] w_t[j] g_ij^2` approximates `||g||^2` on the window.
pub fn st_weights(xs: &[f64], ts: &[f64], w: &ObservationWindow) -> (Vec<f64>, Vec<f64>) {
    (
        edge_weights(xs, w.omega.left(), w.omega.right()),
        edge_weights(ts, w.t1, w.t_final),
    )
}

fn weighted_inner(g: &DMatrix<f64>, h: &DMatrix<f64>, wx: &[f64], wt: &[f64]) -> f64 {
    let mut total = 0.0;
    for (j, &b) in wt.iter().enumerate() {
        let mut col = 0.0;
        for (i, &a) in wx.iter().enumerate() {
            col += a * g[(i, j)] * h[(i, j)];
        }
        total += b * col;
    }
    total
}

fn weighted_norm(g: &DMatrix<f64>, wx: &[f64], wt: &[f64]) -> f64 {
    weighted_inner(g, g, wx, wt).max(0.0).sqrt()
}

/// `||g||_{L^2(omega x (T1,T))}`.
pub fn st_norm(d: &ObservationData) -> Result<f64> {
    if d.samples.is_empty() {
        return invalid("empty observation");
    }
    let (wx, wt) = d.weights();
    Ok(weighted_norm(&d.samples, &wx, &wt))
}

/// `(g, h)_{L^2(omega x (T1,T))}` for two datasets on the same sub-grid.
pub fn st_inner(g: &ObservationData, h: &ObservationData) -> Result<f64> {
    if g.samples.shape() != h.samples.shape() || g.xs != h.xs || g.ts != h.ts {
        return invalid("observations live on different sub-grids");
    }
    if g.samples.is_empty() {
        return invalid("empty observation");
    }
    let (wx, wt) = g.weights();
    Ok(weighted_inner(&g.samples, &h.samples, &wx, &wt))
}

/// `||a - b||` on the window.
pub fn st_distance(a: &ObservationData, b: &ObservationData) -> Result<f64> {
    if a.samples.shape() != b.samples.shape() {
        return invalid("observations live on different sub-grids");
    }
    let (wx, wt) = a.weights();
    Ok(weighted_norm(&(&a.samples - &b.samples), &wx, &wt))
}
