//! Uniform grids on intervals and rectangles.
//!
//! Only interior nodes carry unknowns. Every [`GridFunction`] is understood to
//! vanish on the boundary and everywhere outside the domain, which is how the
//! Dirichlet exterior condition enters the discrete problem.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// A node coordinate. One-dimensional grids leave the second slot at zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainGrid {
    dim: usize,
    extent: [(f64, f64); 2],
    n_interior: [usize; 2],
    spacing: [f64; 2],
}

impl DomainGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> &[(f64, f64)] {
        &self.extent[..self.dim]
    }

    pub fn n_interior(&self) -> &[usize] {
        &self.n_interior[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.n_interior().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extent().iter().map(|(a, b)| b - a).product()
    }

    /// Coordinate of node `index`, with the x index running fastest.
    pub fn node(&self, index: usize) -> Point {
        let nx = self.n_interior[0];
        let (i, j) = (index % nx, index / nx);
        let x = self.extent[0].0 + (i + 1) as f64 * self.spacing[0];
        let y = if self.dim == 2 {
            self.extent[1].0 + (j + 1) as f64 * self.spacing[1]
        } else {
            0.0
        };
        [x, y]
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    /// Grid with each axis refined so that the old nodes stay nodes.
    pub fn refined(&self) -> DomainGrid {
        let mut counts = [0usize; 2];
        for (c, &n) in counts.iter_mut().zip(self.n_interior()) {
            *c = 2 * n + 1;
        }
        make_grid(self.dim, self.extent(), &counts[..self.dim]).expect("refinement of a valid grid")
    }

    /// Diameter of the domain.
    pub fn diameter(&self) -> f64 {
        self.extent()
            .iter()
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Builds a uniform grid with `n_interior[k]` interior nodes along axis `k`.
pub fn make_grid(dim: usize, extent: &[(f64, f64)], n_interior: &[usize]) -> Result<DomainGrid> {
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if extent.len() != dim || n_interior.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "expected {dim} extents and node counts, got {} and {}",
            extent.len(),
            n_interior.len()
        )));
    }
    let mut grid = DomainGrid {
        dim,
        extent: [(0.0, 1.0); 2],
        n_interior: [1; 2],
        spacing: [1.0; 2],
    };
    for axis in 0..dim {
        let (lo, hi) = extent[axis];
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateExtent { axis, lo, hi });
        }
        let count = n_interior[axis];
        if count < 2 {
            return Err(Error::TooFewNodes { axis, count });
        }
        grid.extent[axis] = (lo, hi);
        grid.n_interior[axis] = count;
        grid.spacing[axis] = (hi - lo) / (count + 1) as f64;
    }
    Ok(grid)
}

/// Nodal values on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: DomainGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: DomainGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: DomainGrid) -> Self {
        Self {
            grid,
            values: alloc::vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: DomainGrid, f: impl Fn(Point) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn from_parts_unchecked(grid: DomainGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &GridFunction, beta: f64) -> Result<GridFunction> {
        same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self::from_parts_unchecked(self.grid, values))
    }

    pub fn scale(&self, alpha: f64) -> GridFunction {
        Self::from_parts_unchecked(self.grid, self.values.iter().map(|v| alpha * v).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn same_grid(a: &DomainGrid, b: &DomainGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// Nodal quadrature weights on the interior nodes.
///
/// Along each axis the weights are `h` except for the two outermost interior
/// nodes, which carry `3h/2`. The rule integrates linear data exactly, sums to
/// the measure of the domain, and differs from the composite trapezoid rule
/// only by `O(h^2)` on functions that vanish on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    grid: DomainGrid,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(grid: &DomainGrid) -> Self {
        let axis_weights = |axis: usize| -> Vec<f64> {
            let n = grid.n_interior[axis];
            let h = grid.spacing[axis];
            (0..n)
                .map(|i| if i == 0 || i + 1 == n { 1.5 * h } else { h })
                .collect()
        };
        let wx = axis_weights(0);
        let weights = if grid.dim == 1 {
            wx
        } else {
            let wy = axis_weights(1);
            let mut w = Vec::with_capacity(grid.len());
            for b in &wy {
                for a in &wx {
                    w.push(a * b);
                }
            }
            w
        };
        Self { grid: *grid, weights }
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature inner product of two nodal vectors on this grid.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }
}

/// `sum_i w_i f_i`.
pub fn integrate(q: &Quadrature, f: &GridFunction) -> Result<f64> {
    same_grid(&q.grid, &f.grid)?;
    Ok(q.weights.iter().zip(&f.values).map(|(w, v)| w * v).sum())
}

/// Discrete `L^p` norm `(sum_i w_i |f_i|^p)^(1/p)`.
pub fn lp_norm(q: &Quadrature, f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^p exponent {p} < 1")));
    }
    same_grid(&q.grid, &f.grid)?;
    let sum: f64 = q
        .weights
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * v.abs().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}
