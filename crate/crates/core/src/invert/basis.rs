//! Finite-dimensional source spaces on the unobserved region.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::registry::Registry;
use crate::spectral::{Region, SpaceGrid, Subdomain};

/// A basis `{chi_n}` of functions supported in a region, with its exact
/// `L^2` Gram matrix.
pub trait SourceBasis: Send + Sync {
    fn name(&self) -> &'static str;

    fn support(&self) -> &Region;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `chi_n(x)` for `n` in `0..len()`; zero outside the support.
    fn eval(&self, n: usize, x: f64) -> f64;

    /// `(chi_i, chi_j)_{L^2(support)}`.
    fn gram(&self) -> DMatrix<f64>;

    /// `chi_n` at every grid node.
    fn sample(&self, n: usize, grid: &SpaceGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(n, x)).collect()
    }

    /// `sum_n a_n chi_n` at every grid node.
    fn combine(&self, a: &[f64], grid: &SpaceGrid) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|&x| a.iter().enumerate().map(|(n, c)| c * self.eval(n, x)).sum())
            .collect()
    }
}

/// Builds a basis of a given size on a given region.
pub trait BasisFamily: Send + Sync {
    fn name(&self) -> &'static str;

    fn build(&self, support: &Region, count: usize) -> Result<Arc<dyn SourceBasis>>;
}

pub fn bases() -> Registry<dyn BasisFamily> {
    let mut r: Registry<dyn BasisFamily> = Registry::new("basis");
    r.register("hat", || Arc::new(HatFamily { clamped: false }));
    r.register("hat-clamped", || Arc::new(HatFamily { clamped: true }));
    r.register("pwc", || Arc::new(PiecewiseConstantFamily));
    r
}

/// Splits `count` functions over the parts of `region` in proportion to their
/// lengths, giving each part at least `min_each`.
fn allocate(region: &Region, count: usize, min_each: usize) -> Result<Vec<usize>> {
    let parts = region.parts();
    if count < min_each * parts.len() {
        return invalid(format!(
            "{count} basis functions cannot cover {} intervals (need {} each)",
            parts.len(),
            min_each
        ));
    }
    let total = region.measure();
    let mut alloc: Vec<usize> = parts
        .iter()
        .map(|p| ((count as f64 * p.length() / total).floor() as usize).max(min_each))
        .collect();
    // Hand out or take back the remainder, largest parts first.
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| parts[b].length().total_cmp(&parts[a].length()));
    let mut k = 0;
    while alloc.iter().sum::<usize>() < count {
        alloc[order[k % order.len()]] += 1;
        k += 1;
    }
    while alloc.iter().sum::<usize>() > count {
        let i = order[k % order.len()];
        if alloc[i] > min_each {
            alloc[i] -= 1;
        }
        k += 1;
    }
    Ok(alloc)
}

fn in_closed(p: &Subdomain, x: f64) -> bool {
    p.left() <= x && x <= p.right()
}

/// Continuous piecewise-linear hats on a uniform partition of each part.
///
/// Clamped hats sit on interior nodes only, so every combination vanishes at
/// the ends of each part; otherwise half-hats are added at both ends.
#[derive(Debug, Clone)]
pub struct HatBasis {
    support: Region,
    clamped: bool,
    /// `(part index, node, spacing)` per function.
    nodes: Vec<(usize, f64, f64)>,
}

impl HatBasis {
    /// Half-hats at the ends of each part.
    pub fn new(support: &Region, count: usize) -> Result<Self> {
        Self::build(support, count, false)
    }

    /// Interior nodes only.
    pub fn clamped(support: &Region, count: usize) -> Result<Self> {
        Self::build(support, count, true)
    }

    fn build(support: &Region, count: usize, clamped: bool) -> Result<Self> {
        let alloc = allocate(support, count, if clamped { 1 } else { 2 })?;
        let mut nodes = Vec::with_capacity(count);
        for (pi, (part, &k)) in support.parts().iter().zip(&alloc).enumerate() {
            let (h, first) = if clamped {
                (part.length() / (k + 1) as f64, 1)
            } else {
                (part.length() / (k - 1) as f64, 0)
            };
            for i in 0..k {
                let x = if !clamped && i == k - 1 {
                    part.right()
                } else {
                    part.left() + (i + first) as f64 * h
                };
                nodes.push((pi, x, h));
            }
        }
        Ok(Self {
            support: support.clone(),
            clamped,
            nodes,
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|&(_, x, _)| x)
    }
}

impl SourceBasis for HatBasis {
    fn name(&self) -> &'static str {
        if self.clamped {
            "hat-clamped"
        } else {
            "hat"
        }
    }

    fn support(&self) -> &Region {
        &self.support
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn eval(&self, n: usize, x: f64) -> f64 {
        let (pi, c, h) = self.nodes[n];
        if !in_closed(&self.support.parts()[pi], x) {
            return 0.0;
        }
        (1.0 - (x - c).abs() / h).max(0.0)
    }

    fn gram(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            let (pi, c, h) = self.nodes[i];
            let part = self.support.parts()[pi];
            let at_edge = !self.clamped && (c == part.left() || c == part.right());
            g[(i, i)] = if at_edge { h / 3.0 } else { 2.0 * h / 3.0 };
            if i + 1 < n && self.nodes[i + 1].0 == pi {
                g[(i, i + 1)] = h / 6.0;
                g[(i + 1, i)] = h / 6.0;
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HatFamily {
    pub clamped: bool,
}

impl BasisFamily for HatFamily {
    fn name(&self) -> &'static str {
        if self.clamped {
            "hat-clamped"
        } else {
            "hat"
        }
    }

    fn build(&self, support: &Region, count: usize) -> Result<Arc<dyn SourceBasis>> {
        let b = if self.clamped {
            HatBasis::clamped(support, count)?
        } else {
            HatBasis::new(support, count)?
        };
        Ok(Arc::new(b))
    }
}

/// Indicators of a uniform partition of each part; cells are `[a, b)` except
/// the last cell of a part, which is closed.
#[derive(Debug, Clone)]
pub struct PiecewiseConstantBasis {
    support: Region,
    cells: Vec<(f64, f64, bool)>,
}

impl PiecewiseConstantBasis {
    pub fn new(support: &Region, count: usize) -> Result<Self> {
        let alloc = allocate(support, count, 1)?;
        let mut cells = Vec::with_capacity(count);
        for (part, &k) in support.parts().iter().zip(&alloc) {
            let h = part.length() / k as f64;
            for i in 0..k {
                let a = part.left() + i as f64 * h;
                let b = if i == k - 1 { part.right() } else { a + h };
                cells.push((a, b, i == k - 1));
            }
        }
        Ok(Self {
            support: support.clone(),
            cells,
        })
    }
}

impl SourceBasis for PiecewiseConstantBasis {
    fn name(&self) -> &'static str {
        "pwc"
    }

    fn support(&self) -> &Region {
        &self.support
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    fn eval(&self, n: usize, x: f64) -> f64 {
        let (a, b, closed) = self.cells[n];
        if a <= x && (x < b || (closed && x == b)) {
            1.0
        } else {
            0.0
        }
    }

    fn gram(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.cells.len(),
            self.cells.iter().map(|&(a, b, _)| b - a),
        ))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PiecewiseConstantFamily;

impl BasisFamily for PiecewiseConstantFamily {
    fn name(&self) -> &'static str {
        "pwc"
    }

    fn build(&self, support: &Region, count: usize) -> Result<Arc<dyn SourceBasis>> {
        Ok(Arc::new(PiecewiseConstantBasis::new(support, count)?))
    }
}
