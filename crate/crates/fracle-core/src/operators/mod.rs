//! Dense Dirichlet operators on uniform grids.
//!
//! Every operator is returned as a stiffness matrix `K` together with the
//! diagonal mass `M` of the nodal quadrature, so that the discrete operator acts
//! as `M^{-1} K` and `u^T K v` approximates the bilinear form.

mod fourier;
mod gagliardo;

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{DomainGrid, Point, Quadrature};
use crate::quadrature::GaussRule;

pub use fourier::fourier_constant;
pub use gagliardo::lattice_coefficient;

pub type Modulation = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Potential = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Kernel `k(x, y) |x - y|^{-1-2s}` with `lower <= k <= upper`.
#[derive(Clone)]
pub struct KernelSpec {
    pub s: f64,
    pub modulation: Modulation,
    pub lower: f64,
    pub upper: f64,
}

/// Even, nonnegative, unit-mass profile `J` supported in `[-radius, radius]`.
///
/// The operator contributed is the nonlocal diffusion `u - J * u`.
#[derive(Clone)]
pub struct ConvolutionSpec {
    pub profile: Profile,
    pub radius: f64,
}

impl ConvolutionSpec {
    /// Normalized triangle bump `(1/eps) (1 - |t|/eps)_+`.
    pub fn triangle(eps: f64) -> Self {
        Self {
            profile: Arc::new(move |t: f64| (1.0 - t.abs() / eps).max(0.0) / eps),
            radius: eps,
        }
    }
}

#[derive(Clone)]
pub enum OperatorKind {
    IntegralFractional(f64),
    SpectralFractional(f64),
    Local,
    Kernel(KernelSpec),
    Convolution(ConvolutionSpec),
    Sum(Vec<OperatorKind>),
}

impl OperatorKind {
    /// Fractional order, if the kind has one.
    pub fn order(&self) -> Option<f64> {
        match self {
            Self::IntegralFractional(s) | Self::SpectralFractional(s) => Some(*s),
            Self::Kernel(k) => Some(k.s),
            Self::Local => Some(1.0),
            Self::Convolution(_) => None,
            Self::Sum(parts) => parts.iter().filter_map(Self::order).reduce(f64::max),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::IntegralFractional(s) => format!("integral_fractional({s})"),
            Self::SpectralFractional(s) => format!("spectral_fractional({s})"),
            Self::Local => String::from("local"),
            Self::Kernel(k) => format!("kernel({})", k.s),
            Self::Convolution(c) => format!("convolution({})", c.radius),
            Self::Sum(parts) => {
                let inner: Vec<String> = parts.iter().map(Self::label).collect();
                format!("sum({})", inner.join(","))
            }
        }
    }
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub potential: Option<Potential>,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind) -> Self {
        Self { kind, potential: None }
    }

    pub fn with_potential(mut self, a: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.potential = Some(Arc::new(a));
        self
    }

    pub fn label(&self) -> String {
        match self.potential {
            Some(_) => format!("{}+potential", self.kind.label()),
            None => self.kind.label(),
        }
    }
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Stiffness matrix with its diagonal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    grid: DomainGrid,
    kind: String,
    order: Option<f64>,
    entries: DMatrix<f64>,
    mass: Vec<f64>,
}

impl OperatorMatrix {
    /// Wraps an externally built matrix, checking shape and symmetry.
    pub fn from_parts(
        grid: DomainGrid,
        kind: String,
        order: Option<f64>,
        entries: DMatrix<f64>,
        mass: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        if entries.nrows() != n || entries.ncols() != n || mass.len() != n {
            return Err(Error::GridMismatch(format!(
                "matrix {}x{} with mass {} on a grid of {n} nodes",
                entries.nrows(),
                entries.ncols(),
                mass.len()
            )));
        }
        if mass.iter().any(|m| !(*m > 0.0)) || entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(String::from(
                "mass must be positive and entries finite",
            )));
        }
        let asym = symmetry_defect(&entries);
        if asym > 1e-12 {
            return Err(Error::InvalidParameter(format!("matrix not symmetric (defect {asym:e})")));
        }
        Ok(Self { grid, kind, order, entries, mass })
    }

    fn new(grid: &DomainGrid, kind: String, order: Option<f64>, entries: DMatrix<f64>) -> Self {
        let mass = Quadrature::new(grid).weights().to_vec();
        Self { grid: *grid, kind, order, entries, mass }
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn order(&self) -> Option<f64> {
        self.order
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `K x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.entries * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    /// `M^{-1/2} K M^{-1/2}`, whose spectrum is that of the pencil `(K, M)`.
    pub fn standard_form(&self) -> DMatrix<f64> {
        let r: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut a = DMatrix::from_fn(self.len(), self.len(), |i, j| r[i] * self.entries[(i, j)] * r[j]);
        symmetrize(&mut a);
        a
    }

    /// Smallest eigenvalue of `K phi = lambda M phi` from a full dense solve.
    pub fn lambda_min(&self) -> f64 {
        self.standard_form()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn symmetry_defect(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..j {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    for j in 0..a.ncols() {
        for i in 0..j {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(s))
    }
}

fn require_1d(grid: &DomainGrid, what: &str) -> Result<()> {
    if grid.dim() == 1 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{what} is only available on 1D grids")))
    }
}

/// Dirichlet Laplacian: 3-point stencil in 1D, 5-point stencil in 2D, scaled so
/// that `u^T K u` approximates the Dirichlet integral.
pub fn assemble_local(grid: &DomainGrid) -> OperatorMatrix {
    let n = grid.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    let h = grid.spacing();
    let nx = grid.n_interior()[0];
    // coupling across x-edges and y-edges
    let (cx, cy) = if grid.dim() == 1 {
        (1.0 / h[0], 0.0)
    } else {
        (h[1] / h[0], h[0] / h[1])
    };
    for m in 0..n {
        let i = m % nx;
        k[(m, m)] = 2.0 * cx;
        if i > 0 {
            k[(m, m - 1)] = -cx;
        }
        if i + 1 < nx {
            k[(m, m + 1)] = -cx;
        }
        if grid.dim() == 2 {
            let ny = grid.n_interior()[1];
            let j = m / nx;
            k[(m, m)] += 2.0 * cy;
            if j > 0 {
                k[(m, m - nx)] = -cy;
            }
            if j + 1 < ny {
                k[(m, m + nx)] = -cy;
            }
        }
    }
    OperatorMatrix::new(grid, String::from("local"), Some(1.0), k)
}

/// Gram matrix of `1/2 iint (u(x)-u(y))(phi(x)-phi(y)) |x-y|^{-1-2s}` over hat
/// functions with zero exterior extension. The normalizing constant `C(1,s)` is
/// not included.
pub fn assemble_integral_fraclap(grid: &DomainGrid, s: f64) -> Result<OperatorMatrix> {
    check_order(s)?;
    require_1d(grid, "the integral fractional Laplacian")?;
    let k = gagliardo::integral_matrix(grid, s);
    Ok(OperatorMatrix::new(grid, format!("integral_fractional({s})"), Some(s), k))
}

/// `s`-th power of the discrete Dirichlet Laplacian with respect to the mass:
/// `K_s = M^{1/2} (M^{-1/2} K M^{-1/2})^s M^{1/2}`. `s = 1` returns the local
/// matrix itself.
pub fn assemble_spectral_fraclap(grid: &DomainGrid, s: f64) -> Result<OperatorMatrix> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let local = assemble_local(grid);
    if s == 1.0 {
        return Ok(local);
    }
    let eig = local.standard_form().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        if !(*lam > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: k, value: *lam });
        }
        let f = lam.powf(s);
        scaled.column_mut(k).scale_mut(f);
    }
    let mut power = scaled * eig.eigenvectors.transpose();
    symmetrize(&mut power);
    let sq: Vec<f64> = local.mass.iter().map(|m| m.sqrt()).collect();
    let n = grid.len();
    let k = DMatrix::from_fn(n, n, |i, j| sq[i] * power[(i, j)] * sq[j]);
    Ok(OperatorMatrix::new(grid, format!("spectral_fractional({s})"), Some(s), k))
}

fn validate_kernel(grid: &DomainGrid, spec: &KernelSpec) -> Result<()> {
    check_order(spec.s)?;
    if !(spec.lower > 0.0 && spec.lower <= spec.upper && spec.upper.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel bounds must satisfy 0 < C <= C', got ({}, {})",
            spec.lower, spec.upper
        )));
    }
    // nodes and element midpoints, including points outside the domain
    let lo = grid.extent()[0].0;
    let h = grid.spacing()[0];
    let count = 2 * grid.len() + 3;
    let pts: Vec<f64> = (0..count).map(|k| lo - h + 0.5 * h * k as f64).collect();
    let slack = 1e-12 * spec.upper;
    for &x in &pts {
        for &y in &pts {
            let a = (spec.modulation)(x, y);
            let b = (spec.modulation)(y, x);
            if !a.is_finite() || (a - b).abs() > slack {
                return Err(Error::InvalidParameter(format!(
                    "kernel not symmetric at ({x}, {y}): {a} vs {b}"
                )));
            }
            if a < spec.lower - slack || a > spec.upper + slack {
                return Err(Error::InvalidParameter(format!(
                    "kernel modulation {a} at ({x}, {y}) outside [{}, {}]",
                    spec.lower, spec.upper
                )));
            }
        }
    }
    Ok(())
}

fn validate_convolution(spec: &ConvolutionSpec) -> Result<()> {
    let r = spec.radius;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("convolution radius {r} must be positive")));
    }
    let peak = (0..=64).map(|k| (spec.profile)(r * k as f64 / 64.0)).fold(0.0, f64::max);
    for k in 0..=256 {
        let t = r * k as f64 / 256.0;
        let (a, b) = ((spec.profile)(t), (spec.profile)(-t));
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::InvalidParameter(format!("convolution profile negative near t = {t}")));
        }
        if (a - b).abs() > 1e-12 * peak.max(1.0) {
            return Err(Error::InvalidParameter(format!("convolution profile not even at t = {t}")));
        }
    }
    let rule = GaussRule::legendre(8);
    let pieces = 32;
    let mut mass = 0.0;
    for k in 0..pieces {
        let a = r * k as f64 / pieces as f64;
        let b = r * (k + 1) as f64 / pieces as f64;
        mass += 2.0 * rule.integrate(a, b, |t| (spec.profile)(t));
    }
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!("convolution profile has mass {mass}, expected 1")));
    }
    Ok(())
}

/// `W - T` where `W` is the nodal mass and `T_ij = iint J(x-y) psi_i(x) psi_j(y)`.
fn convolution_matrix(grid: &DomainGrid, spec: &ConvolutionSpec) -> DMatrix<f64> {
    let n = grid.len();
    let h = grid.spacing()[0];
    let r = spec.radius;
    let rule = GaussRule::legendre(8);
    // hat autocorrelation: h * B3(t/h - m), B3 the centered cubic B-spline
    let b3 = |x: f64| {
        let a = x.abs();
        if a >= 2.0 {
            0.0
        } else if a >= 1.0 {
            (2.0 - a).powi(3) / 6.0
        } else {
            2.0 / 3.0 - a * a + 0.5 * a * a * a
        }
    };
    let coeffs: Vec<f64> = (0..n)
        .map(|m| {
            let lo = ((m as f64 - 2.0) * h).max(-r);
            let hi = ((m as f64 + 2.0) * h).min(r);
            if lo >= hi {
                return 0.0;
            }
            let mut breaks: Vec<f64> = (0..=4).map(|k| (m as f64 - 2.0 + k as f64) * h).collect();
            breaks.extend([0.0, -r, r]);
            breaks.retain(|b| *b >= lo && *b <= hi);
            breaks.push(lo);
            breaks.push(hi);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            breaks
                .windows(2)
                .map(|w| rule.integrate(w[0], w[1], |t| (spec.profile)(t) * b3(t / h - m as f64)))
                .sum::<f64>()
                * h
        })
        .collect();
    let w = Quadrature::new(grid).weights().to_vec();
    DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { w[i] } else { 0.0 };
        diag - coeffs[i.abs_diff(j)]
    })
}

fn assemble_kind(grid: &DomainGrid, kind: &OperatorKind) -> Result<DMatrix<f64>> {
    match kind {
        OperatorKind::Local => Ok(assemble_local(grid).entries),
        OperatorKind::IntegralFractional(s) => Ok(assemble_integral_fraclap(grid, *s)?.entries),
        OperatorKind::SpectralFractional(s) => {
            check_order(*s)?;
            Ok(assemble_spectral_fraclap(grid, *s)?.entries)
        }
        OperatorKind::Kernel(spec) => {
            require_1d(grid, "a kernel operator")?;
            validate_kernel(grid, spec)?;
            let quad = gagliardo::KernelQuadrature {
                s: spec.s,
                modulation: spec.modulation.as_ref(),
                radius: 10.0 * grid.diameter(),
            };
            Ok(quad.assemble(grid))
        }
        OperatorKind::Convolution(spec) => {
            require_1d(grid, "a convolution operator")?;
            validate_convolution(spec)?;
            Ok(convolution_matrix(grid, spec))
        }
        OperatorKind::Sum(parts) => {
            if parts.is_empty() {
                return Err(Error::InvalidParameter(String::from("empty operator sum")));
            }
            let mut total = DMatrix::<f64>::zeros(grid.len(), grid.len());
            for part in parts {
                total += assemble_kind(grid, part)?;
            }
            Ok(total)
        }
    }
}

/// Sum of the constituent operators plus the lumped potential `diag(w_i a(x_i))`.
///
/// Fails with [`Error::PositivityViolated`] when the result is not positive
/// definite, which for a potential means `inf a <= -lambda_1`.
pub fn assemble_generalized(grid: &DomainGrid, spec: &OperatorSpec) -> Result<OperatorMatrix> {
    let mut k = assemble_kind(grid, &spec.kind)?;
    if let Some(a) = &spec.potential {
        let w = Quadrature::new(grid);
        for (i, (x, wi)) in grid.nodes().zip(w.weights()).enumerate() {
            let v = a(x);
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("potential not finite at {x:?}")));
            }
            k[(i, i)] += wi * v;
        }
    }
    symmetrize(&mut k);
    let op = OperatorMatrix::new(grid, spec.label(), spec.kind.order(), k);
    let lambda_min = op.lambda_min();
    if !(lambda_min > 0.0) {
        return Err(Error::PositivityViolated { lambda_min });
    }
    Ok(op)
}
