//! Dirichlet eigensystem of `-d_xx` on `(0, 1)`, the spatial grid, and `L^2`
//! quadrature on the whole interval or on a union of subintervals.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};

/// Uniform grid on `[0, 1]` with an odd number of nodes (Simpson-compatible).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    nodes: Vec<f64>,
}

impl SpaceGrid {
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 3 || count.is_multiple_of(2) {
            return invalid(format!(
                "the spatial grid needs an odd node count >= 3, got {count}"
            ));
        }
        let h = 1.0 / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| i as f64 * h).collect();
        nodes[count - 1] = 1.0;
        Ok(Self { nodes })
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
        1.0 / (self.nodes.len() - 1) as f64
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Composite Simpson weights over the whole interval.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let h = self.step();
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    }
}

/// An eigensystem `{(lambda_n, phi_n)}` of the spatial operator, `n >= 1`,
/// together with the fractional order `beta` of `A^beta`.
pub trait Eigensystem: Send + Sync {
    fn mode_count(&self) -> usize;

    fn beta(&self) -> f64;

    fn eigenvalue(&self, n: usize) -> f64;

    fn eigenfunction(&self, n: usize, x: f64) -> f64;

    /// `lambda_n^beta`.
    fn fractional_eigenvalue(&self, n: usize) -> f64 {
        (self.beta() * self.eigenvalue(n).ln()).exp()
    }
}

/// `lambda_n = (n pi)^2`, `phi_n(x) = sqrt(2) sin(n pi x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletSine {
    modes: usize,
    beta: f64,
}

impl DirichletSine {
    pub fn new(modes: usize, beta: f64) -> Result<Self> {
        if modes == 0 {
            return invalid("at least one eigenmode is required");
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return invalid(format!("beta must lie in (0, 1], got {beta}"));
        }
        Ok(Self { modes, beta })
    }
}

impl Eigensystem for DirichletSine {
    fn mode_count(&self) -> usize {
        self.modes
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn eigenvalue(&self, n: usize) -> f64 {
        let k = n as f64 * PI;
        k * k
    }

    fn eigenfunction(&self, n: usize, x: f64) -> f64 {
        SQRT_2 * (n as f64 * PI * x).sin()
    }
}

/// `phi_n` sampled on the grid, with the boundary values pinned to zero.
pub fn eigenfunction_samples(es: &dyn Eigensystem, n: usize, grid: &SpaceGrid) -> Vec<f64> {
    let last = grid.len() - 1;
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 || i == last {
                0.0
            } else {
                es.eigenfunction(n, x)
            }
        })
        .collect()
}

/// Coefficients `f_n = (f, phi_n)`, `n = 1..=N`, by composite Simpson.
pub fn expand(f: &[f64], es: &dyn Eigensystem, grid: &SpaceGrid) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return invalid(format!(
            "function has {} samples but the grid has {} nodes",
            f.len(),
            grid.len()
        ));
    }
    let modes = es.mode_count();
    if 4 * modes > grid.len() {
        return invalid(format!(
            "{modes} modes need at least {} grid nodes, got {}",
            4 * modes,
            grid.len()
        ));
    }
    let w = grid.simpson_weights();
    let fw: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
    Ok((1..=modes)
        .map(|n| {
            eigenfunction_samples(es, n, grid)
                .iter()
                .zip(&fw)
                .map(|(p, q)| p * q)
                .sum()
        })
        .collect())
}

/// `sum_n c_n phi_n` at the grid nodes.
pub fn synthesize(coeffs: &[f64], es: &dyn Eigensystem, grid: &SpaceGrid) -> Result<Vec<f64>> {
    if coeffs.len() != es.mode_count() {
        return invalid(format!(
            "expected {} coefficients, got {}",
            es.mode_count(),
            coeffs.len()
        ));
    }
    let mut out = vec![0.0; grid.len()];
    for (n, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(eigenfunction_samples(es, n + 1, grid)) {
            *o += c * p;
        }
    }
    Ok(out)
}

/// Open interval `(left, right)` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subdomain {
    left: f64,
    right: f64,
}

impl Subdomain {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(0.0 <= left && left < right && right <= 1.0) {
            return invalid(format!(
                "subdomain ({left}, {right}) must satisfy 0 <= left < right <= 1"
            ));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left < x && x < self.right
    }
}

/// Union of disjoint subintervals, e.g. the complement of an observation
/// window. Parts are kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    parts: Vec<Subdomain>,
}

impl Region {
    pub fn new(mut parts: Vec<Subdomain>) -> Result<Self> {
        if parts.is_empty() {
            return invalid("a region needs at least one subinterval");
        }
        parts.sort_by(|a, b| a.left.total_cmp(&b.left));
        if parts.windows(2).any(|w| w[0].right > w[1].left) {
            return invalid("region parts overlap");
        }
        Ok(Self { parts })
    }

    pub fn whole() -> Self {
        Self {
            parts: vec![Subdomain { left: 0.0, right: 1.0 }],
        }
    }

    /// `(0, 1)` minus `omega`: one or two intervals.
    pub fn complement_of(omega: &Subdomain) -> Result<Self> {
        let mut parts = Vec::with_capacity(2);
        if omega.left > 0.0 {
            parts.push(Subdomain::new(0.0, omega.left)?);
        }
        if omega.right < 1.0 {
            parts.push(Subdomain::new(omega.right, 1.0)?);
        }
        if parts.is_empty() {
            return invalid("the observation window covers the whole domain");
        }
        Self::new(parts)
    }

    pub fn parts(&self) -> &[Subdomain] {
        &self.parts
    }

    pub fn measure(&self) -> f64 {
        self.parts.iter().map(Subdomain::length).sum()
    }

    /// Membership in the closure, which is what matters for sampled data.
    pub fn contains_closed(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.left <= x && x <= p.right)
    }
}

impl From<Subdomain> for Region {
    fn from(s: Subdomain) -> Self {
        Self { parts: vec![s] }
    }
}

/// `\int_sub g h dx` by composite quadrature restricted to `sub`.
///
/// Whole cells inside the interval use Simpson's rule (with a 3/8 panel when
/// the cell count is odd); the partial cells at non-node endpoints use the
/// trapezoid rule with `g` and `h` interpolated linearly to the endpoint.
pub fn inner_product_on(region: &Region, g: &[f64], h: &[f64], grid: &SpaceGrid) -> Result<f64> {
    if g.len() != grid.len() || h.len() != grid.len() {
        return invalid("inner product operands must be sampled on the grid");
    }
    let p: Vec<f64> = g.iter().zip(h).map(|(a, b)| a * b).collect();
    let mut total = 0.0;
    for part in region.parts() {
        total += integrate_interval(&p, grid, part.left, part.right, g, h);
    }
    Ok(total)
}

/// `\int_region g^2`, square-rooted.
pub fn norm_on(region: &Region, g: &[f64], grid: &SpaceGrid) -> Result<f64> {
    Ok(inner_product_on(region, g, g, grid)?.max(0.0).sqrt())
}

fn integrate_interval(p: &[f64], grid: &SpaceGrid, a: f64, b: f64, g: &[f64], h: &[f64]) -> f64 {
    let step = grid.step();
    let last = grid.len() - 1;
    let snap = |v: f64| -> Option<usize> {
        let r = v / step;
        let i = r.round();
        ((r - i).abs() < 1e-9).then_some(i as usize)
    };
    // First node at or after a, last node at or before b.
    let i0 = snap(a).unwrap_or_else(|| ((a / step).ceil() as usize).min(last));
    let i1 = snap(b).unwrap_or_else(|| (b / step).floor() as usize);
    let x = grid.nodes();
    let interp = |v: &[f64], t: f64| -> f64 {
        let i = ((t / step).floor() as usize).min(last - 1);
        let s = (t - x[i]) / step;
        v[i] * (1.0 - s) + v[i + 1] * s
    };
    if i0 > i1 {
        // The interval sits strictly inside one cell.
        let pa = interp(g, a) * interp(h, a);
        let pb = interp(g, b) * interp(h, b);
        return 0.5 * (b - a) * (pa + pb);
    }
    let mut total = 0.0;
    if x[i0] > a {
        let pa = interp(g, a) * interp(h, a);
        total += 0.5 * (x[i0] - a) * (pa + p[i0]);
    }
    if x[i1] < b {
        let pb = interp(g, b) * interp(h, b);
        total += 0.5 * (b - x[i1]) * (p[i1] + pb);
    }
    total + composite_nodes(&p[i0..=i1], step)
}

/// Simpson over an equally spaced run of samples; a 3/8 panel absorbs an odd
/// cell count, and one or two cells fall back to trapezoid/Simpson.
fn composite_nodes(v: &[f64], h: f64) -> f64 {
    let cells = v.len() - 1;
    match cells {
        0 => 0.0,
        1 => 0.5 * h * (v[0] + v[1]),
        _ => {
            let (simpson_cells, tail) = if cells.is_multiple_of(2) { (cells, 0) } else { (cells - 3, 3) };
            let mut s = 0.0;
            let mut i = 0;
            while i < simpson_cells {
                s += h / 3.0 * (v[i] + 4.0 * v[i + 1] + v[i + 2]);
                i += 2;
            }
            if tail == 3 {
                s += 3.0 * h / 8.0 * (v[i] + 3.0 * v[i + 1] + 3.0 * v[i + 2] + v[i + 3]);
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpaceGrid {
        SpaceGrid::uniform(201).unwrap()
    }

    #[test]
    fn expand_basis_function_and_constants() {
        let g = grid();
        let es = DirichletSine::new(40, 0.7).unwrap();
        let phi1 = eigenfunction_samples(&es, 1, &g);
        let c = expand(&phi1, &es, &g).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-8);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-8));

        // Composite Simpson bound: h^4 max|(f phi_n)''''| / 180.
        let bound = |n: usize| {
            let k = n as f64 * PI;
            g.step().powi(4) * SQRT_2 * k.powi(4) * (1.0 + 4.0 / k) / 180.0
        };
        let ones = vec![1.0; g.len()];
        let c = expand(&ones, &es, &g).unwrap();
        for n in 1..=10 {
            let exact = if n % 2 == 1 { 2.0 * SQRT_2 / (n as f64 * PI) } else { 0.0 };
            assert!((c[n - 1] - exact).abs() <= bound(n), "n={n}: {} vs {exact}", c[n - 1]);
        }
        let xs = g.nodes().to_vec();
        let c = expand(&xs, &es, &g).unwrap();
        for n in 1..=10 {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let exact = SQRT_2 * sign / (n as f64 * PI);
            assert!((c[n - 1] - exact).abs() <= bound(n), "n={n}");
        }
    }

    #[test]
    fn synthesize_round_trip_and_zero() {
        let g = grid();
        let es = DirichletSine::new(40, 1.0).unwrap();
        let mut e1 = vec![0.0; 40];
        e1[0] = 1.0;
        let s = synthesize(&e1, &es, &g).unwrap();
        for (v, x) in s.iter().zip(g.nodes()) {
            assert!((v - SQRT_2 * (PI * x).sin()).abs() < 1e-14);
        }
        let phi2 = eigenfunction_samples(&es, 2, &g);
        let back = synthesize(&expand(&phi2, &es, &g).unwrap(), &es, &g).unwrap();
        assert!(back.iter().zip(&phi2).all(|(a, b)| (a - b).abs() < 1e-8));
        assert!(synthesize(&[0.0; 40], &es, &g).unwrap().iter().all(|&v| v == 0.0));
        assert!(synthesize(&[0.0; 3], &es, &g).is_err());
    }

    #[test]
    fn orthonormality_of_first_ten() {
        let g = grid();
        let es = DirichletSine::new(10, 0.5).unwrap();
        let whole = Region::whole();
        for n in 1..=10 {
            for m in 1..=10 {
                let ip = inner_product_on(
                    &whole,
                    &eigenfunction_samples(&es, n, &g),
                    &eigenfunction_samples(&es, m, &g),
                    &g,
                )
                .unwrap();
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "({n},{m}) {ip}");
            }
        }
    }

    #[test]
    fn too_many_modes_rejected() {
        let g = SpaceGrid::uniform(41).unwrap();
        let es = DirichletSine::new(11, 0.5).unwrap();
        assert!(expand(&vec![0.0; 41], &es, &g).is_err());
        assert!(SpaceGrid::uniform(200).is_err());
    }

    #[test]
    fn subinterval_measures() {
        let g = grid();
        let ones = vec![1.0; g.len()];
        let es = DirichletSine::new(1, 1.0).unwrap();
        let phi1 = eigenfunction_samples(&es, 1, &g);
        let ip = inner_product_on(&Region::whole(), &phi1, &phi1, &g).unwrap();
        assert!((ip - 1.0).abs() < 1e-8);
        for &(a, b) in &[(0.0, 0.5), (0.0, 0.06), (0.06, 1.0), (0.0123, 0.0171), (0.3, 0.7771)] {
            let r: Region = Subdomain::new(a, b).unwrap().into();
            let v = inner_product_on(&r, &ones, &ones, &g).unwrap();
            assert!((v - (b - a)).abs() < 1e-13, "({a},{b}) -> {v}");
        }
        // Smooth integrand on a non-aligned interval: second-order partial cells.
        let r: Region = Subdomain::new(0.1234, 0.8765).unwrap().into();
        let v = inner_product_on(&r, &phi1, &ones, &g).unwrap();
        let exact = SQRT_2 / PI * ((PI * 0.1234).cos() - (PI * 0.8765).cos());
        assert!((v - exact).abs() < 1e-5);
    }

    #[test]
    fn complement_regions() {
        let omega = Subdomain::new(0.0, 0.06).unwrap();
        let r = Region::complement_of(&omega).unwrap();
        assert_eq!(r.parts().len(), 1);
        assert!((r.measure() - 0.94).abs() < 1e-15);
        let inner = Subdomain::new(0.4, 0.5).unwrap();
        let r = Region::complement_of(&inner).unwrap();
        assert_eq!(r.parts().len(), 2);
        assert!(Region::complement_of(&Subdomain::new(0.0, 1.0).unwrap()).is_err());
        assert!(Subdomain::new(0.5, 0.5).is_err());
        assert!(Region::new(vec![]).is_err());
    }

    #[test]
    fn fractional_eigenvalues_via_logarithm() {
        let es = DirichletSine::new(5, 0.5).unwrap();
        for n in 1..=5 {
            let direct = es.eigenvalue(n).sqrt();
            assert!((es.fractional_eigenvalue(n) - direct).abs() < 1e-12 * direct);
        }
        let es = DirichletSine::new(5, 0.25).unwrap();
        for n in 1..=5 {
            let direct = es.eigenvalue(n).sqrt().sqrt();
            assert!((es.fractional_eigenvalue(n) - direct).abs() < 1e-12 * direct);
        }
        let es = DirichletSine::new(30, 0.7).unwrap();
        assert!((1..30).all(|n| es.fractional_eigenvalue(n) < es.fractional_eigenvalue(n + 1)));
    }
}
