//! Admissibility of the exponents `(p, q)` for given `(n, s)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentParams {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl ExponentParams {
    pub fn new(n: usize, s: f64, p: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidOrder(s));
        }
        if !(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponents must exceed 1, got p = {p}, q = {q}")));
        }
        Ok(Self { n, s, p, q })
    }

    pub fn swapped(&self) -> Self {
        Self { p: self.q, q: self.p, ..*self }
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// Sobolev exponent `2n / (n - 2t)`, infinite when `n <= 2t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalExponent {
    Finite(f64),
    Infinite,
}

impl CriticalExponent {
    /// `x < 2*_t`.
    pub fn exceeds(&self, x: f64) -> bool {
        match self {
            Self::Finite(c) => x < *c,
            Self::Infinite => true,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite(c) => Some(*c),
            Self::Infinite => None,
        }
    }
}

pub fn critical_exponent(n: usize, t: f64) -> CriticalExponent {
    let nf = n as f64;
    if nf <= 2.0 * t {
        CriticalExponent::Infinite
    } else {
        CriticalExponent::Finite(2.0 * nf / (nf - 2.0 * t))
    }
}

/// `1 - 2s/n < 1/p + 1/q < 1`.
pub fn check_pq0(e: &ExponentParams) -> bool {
    pq0_left(e) && 1.0 / e.p + 1.0 / e.q < 1.0
}

pub(crate) fn pq0_left(e: &ExponentParams) -> bool {
    1.0 - 2.0 * e.s / e.nf() < 1.0 / e.p + 1.0 / e.q
}

/// Vacuous when `n <= 4s`; otherwise `1/p, 1/q > (n - 4s) / (2n)`.
pub fn check_pq1(e: &ExponentParams) -> bool {
    let n = e.nf();
    if n <= 4.0 * e.s {
        return true;
    }
    let bound = (n - 4.0 * e.s) / (2.0 * n);
    1.0 / e.p > bound && 1.0 / e.q > bound
}

/// Open interval of `theta` with `p < 2*_{s theta}` and `q < 2*_{s(2-theta)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaWindow {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl ThetaWindow {
    pub fn midpoint(&self) -> Option<f64> {
        (!self.empty).then_some(0.5 * (self.lo + self.hi))
    }

    pub fn contains(&self, theta: f64) -> bool {
        !self.empty && theta > self.lo && theta < self.hi
    }
}

pub fn theta_window(e: &ExponentParams) -> ThetaWindow {
    let scale = e.nf() / (2.0 * e.s);
    let lo = (scale * (1.0 - 2.0 / e.p)).max(0.0);
    let hi = (2.0 - scale * (1.0 - 2.0 / e.q)).min(2.0);
    ThetaWindow { lo, hi, empty: !(lo < hi) }
}

/// Both embedding conditions at a given `theta`, evaluated on the critical exponents.
pub fn condpq_holds(e: &ExponentParams, theta: f64) -> bool {
    critical_exponent(e.n, e.s * theta).exceeds(e.p) && critical_exponent(e.n, e.s * (2.0 - theta)).exceeds(e.q)
}

pub fn corollary_region(e: &ExponentParams) -> bool {
    if !(check_pq0(e) && check_pq1(e)) {
        return false;
    }
    let n = e.nf();
    let target = 2.0 * (n - 2.0 * e.s) / (n + 2.0 * e.s);
    let (p, q) = (e.p, e.q);
    (p <= q && (p + q) / (p * (q - 1.0)) >= target) || (p >= q && (p + q) / (q * (p - 1.0)) >= target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionCell {
    pub p: f64,
    pub q: f64,
    pub pq0: bool,
    pub pq1: bool,
    pub corollary: bool,
    pub window: bool,
}

/// Membership flags on a `resolution x resolution` lattice, `p` running fastest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionGrid {
    pub n: usize,
    pub s: f64,
    pub resolution: usize,
    pub p_range: (f64, f64),
    pub q_range: (f64, f64),
    pub cells: Vec<RegionCell>,
}

impl RegionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i + j * self.resolution]
    }
}

fn lattice(range: (f64, f64), resolution: usize, k: usize) -> f64 {
    range.0 + (range.1 - range.0) * k as f64 / (resolution - 1) as f64
}

pub fn evaluate_cell(n: usize, s: f64, p: f64, q: f64) -> RegionCell {
    let e = ExponentParams { n, s, p, q };
    RegionCell {
        p,
        q,
        pq0: check_pq0(&e),
        pq1: check_pq1(&e),
        corollary: corollary_region(&e),
        window: !theta_window(&e).empty,
    }
}

pub fn sample_region(
    n: usize,
    s: f64,
    p_range: (f64, f64),
    q_range: (f64, f64),
    resolution: usize,
) -> Result<RegionGrid> {
    ExponentParams::new(n, s, 2.0, 2.0)?;
    for (name, r) in [("p", p_range), ("q", q_range)] {
        if !(r.0 > 1.0 && r.1 > r.0 && r.1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} range ({}, {}) must be nonempty and inside (1, inf)",
                r.0, r.1
            )));
        }
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!("resolution {resolution} < 2")));
    }
    let total = resolution * resolution;
    let cell = |k: usize| {
        let (i, j) = (k % resolution, k / resolution);
        evaluate_cell(n, s, lattice(p_range, resolution, i), lattice(q_range, resolution, j))
    };
    #[cfg(feature = "parallel")]
    let cells = {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(cell).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells = (0..total).map(cell).collect();
    Ok(RegionGrid { n, s, resolution, p_range, q_range, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, s: f64, p: f64, q: f64) -> ExponentParams {
        ExponentParams::new(n, s, p, q).unwrap()
    }

    #[test]
    fn critical_examples() {
        assert_eq!(critical_exponent(3, 1.0), CriticalExponent::Finite(6.0));
        assert_eq!(critical_exponent(1, 0.5), CriticalExponent::Infinite);
        assert_eq!(critical_exponent(5, 0.5), CriticalExponent::Finite(2.5));
    }

    #[test]
    fn pq0_examples() {
        assert!(check_pq0(&params(5, 0.5, 2.2, 2.2)));
        assert!(!check_pq0(&params(5, 0.5, 2.5, 2.5)));
        assert!(!check_pq0(&params(5, 0.5, 2.0, 2.0)));
    }

    #[test]
    fn pq1_examples() {
        assert!(check_pq1(&params(1, 0.25, 100.0, 1.5)));
        assert!(check_pq1(&params(5, 0.5, 2.2, 2.2)));
        assert!(!check_pq1(&params(5, 0.5, 4.0, 2.2)));
    }

    #[test]
    fn window_examples() {
        let w = theta_window(&params(5, 0.5, 2.2, 2.2));
        assert!((w.lo - 5.0 / 11.0).abs() < 1e-14 && (w.hi - 17.0 / 11.0).abs() < 1e-14);
        assert!((w.midpoint().unwrap() - 1.0).abs() < 1e-14);
        let w = theta_window(&params(1, 0.25, 3.0, 3.0));
        assert!((w.lo - 2.0 / 3.0).abs() < 1e-14 && (w.hi - 4.0 / 3.0).abs() < 1e-14);
        assert!(theta_window(&params(5, 0.5, 4.0, 4.0)).empty);
    }

    #[test]
    fn corollary_examples() {
        assert!(corollary_region(&params(5, 0.5, 2.2, 2.2)));
        // 1/2.1 + 1/3.2 = 0.789 is below the left bound 0.8
        assert!(!corollary_region(&params(5, 0.5, 2.1, 3.2)));
        assert!(!corollary_region(&params(5, 0.5, 2.5, 2.5)));
    }

    #[test]
    fn region_layout_and_validation() {
        let r = sample_region(5, 0.5, (2.0, 4.0), (2.0, 3.0), 3).unwrap();
        assert_eq!(r.cells.len(), 9);
        assert_eq!((r.cell(2, 0).p, r.cell(2, 0).q), (4.0, 2.0));
        assert_eq!((r.cell(0, 2).p, r.cell(0, 2).q), (2.0, 3.0));
        assert!(sample_region(5, 0.5, (0.5, 2.0), (2.0, 3.0), 3).is_err());
        assert!(sample_region(5, 0.5, (2.0, 2.0), (2.0, 3.0), 3).is_err());
        assert!(sample_region(5, 0.5, (2.0, 3.0), (2.0, 3.0), 1).is_err());
    }
}
