//! Spectral calculus of a discrete Dirichlet operator.
//!
//! Functions are expanded in the `M`-orthonormal eigenvectors of `K phi = lambda M phi`.
//! With `u_k = phi_k^T M u`, the fractional power acts as
//! `A^theta u = sum_k lambda_k^{theta/2} u_k phi_k`, and the space `E^theta`
//! carries the norm `sum_k lambda_k^theta u_k^2`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{same_grid, DomainGrid, GridFunction};
use crate::operators::OperatorMatrix;

/// Eigenpairs of an operator, ascending, with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    grid: DomainGrid,
    mass: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// column `k` holds the nodal values of `phi_k`
    eigenvectors: DMatrix<f64>,
}

/// A pair `z = (u, v)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductElement {
    pub u: GridFunction,
    pub v: GridFunction,
}

impl ProductElement {
    pub fn new(u: GridFunction, v: GridFunction) -> Result<Self> {
        same_grid(u.grid(), v.grid())?;
        Ok(Self { u, v })
    }

    pub fn zeros(grid: DomainGrid) -> Self {
        Self { u: GridFunction::zeros(grid), v: GridFunction::zeros(grid) }
    }

    pub fn grid(&self) -> &DomainGrid {
        self.u.grid()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &ProductElement, beta: f64) -> Result<ProductElement> {
        Ok(Self {
            u: self.u.combine(alpha, &other.u, beta)?,
            v: self.v.combine(alpha, &other.v, beta)?,
        })
    }

    pub fn scale(&self, alpha: f64) -> ProductElement {
        Self { u: self.u.scale(alpha), v: self.v.scale(alpha) }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm().max(self.v.sup_norm())
    }
}

/// Modal coordinates of a product element.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn check_closed(theta: f64) -> Result<()> {
    if (0.0..=2.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

pub(crate) fn check_open(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 2.0 {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

/// Full generalized eigendecomposition `K phi = lambda M phi`.
///
/// Eigenvectors are normalized in the `M` inner product and signed so that their
/// first entry of magnitude above `1e-12 * max` is positive.
pub fn eig_decompose(op: &OperatorMatrix) -> Result<EigenSystem> {
    let n = op.len();
    let a = op.standard_form();
    let eig = a
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenNonConvergence(format!("dense symmetric solver, N = {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let r: Vec<f64> = op.mass().iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let lam = eig.eigenvalues[src];
        if !(lam > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: k, value: lam });
        }
        values.push(lam);
        let col = eig.eigenvectors.column(src);
        let big = col.amax();
        let lead = col.iter().find(|c| c.abs() > 1e-12 * big).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, k)] = sign * r[i] * col[i];
        }
    }
    Ok(EigenSystem {
        grid: *op.grid(),
        mass: op.mass().to_vec(),
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Smallest eigenvalue of `K phi = lambda M phi` by shifted-free inverse
/// iteration with a Cholesky factor of `K`. Suited to large `N`, where a full
/// decomposition is unnecessary.
pub fn lowest_eigenvalue(op: &OperatorMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = op.len();
    let chol = op
        .entries()
        .clone()
        .cholesky()
        .ok_or(Error::PositivityViolated { lambda_min: f64::NAN })?;
    let mass = DVector::from_column_slice(op.mass());
    let mut x = DVector::from_element(n, 1.0);
    let mut previous = f64::INFINITY;
    for _ in 0..max_iter {
        let y = chol.solve(&mass.component_mul(&x));
        let my = mass.component_mul(&y);
        let ky = op.entries() * &y;
        let rq = y.dot(&ky) / y.dot(&my);
        let norm = y.dot(&my).sqrt();
        x = y / norm;
        if (rq - previous).abs() <= tol * rq.abs() {
            return Ok(rq);
        }
        previous = rq;
    }
    Err(Error::EigenNonConvergence(format!("inverse iteration after {max_iter} steps")))
}

impl EigenSystem {
    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `phi_k` as a grid function (zero-based `k`).
    pub fn mode(&self, k: usize) -> GridFunction {
        GridFunction::from_parts_unchecked(self.grid, self.eigenvectors.column(k).iter().copied().collect())
    }

    /// Largest deviation of `Phi^T M Phi` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let mut mphi = self.eigenvectors.clone();
        for (i, m) in self.mass.iter().enumerate() {
            mphi.row_mut(i).scale_mut(*m);
        }
        let gram = self.eigenvectors.transpose() * mphi;
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// `u_k = phi_k^T M u`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        let mu = DVector::from_iterator(u.len(), u.iter().zip(&self.mass).map(|(a, m)| a * m));
        let c = self.eigenvectors.tr_mul(&mu);
        c.as_slice().to_vec()
    }

    /// `sum_k c_k phi_k` as nodal values.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let v = &self.eigenvectors * DVector::from_column_slice(c);
        v.as_slice().to_vec()
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        same_grid(&self.grid, u.grid())
    }

    pub fn to_modal(&self, z: &ProductElement) -> Result<ModalPair> {
        self.check(&z.u)?;
        self.check(&z.v)?;
        Ok(ModalPair { u: self.coefficients(z.u.values()), v: self.coefficients(z.v.values()) })
    }

    pub fn from_modal(&self, m: &ModalPair) -> ProductElement {
        ProductElement {
            u: GridFunction::from_parts_unchecked(self.grid, self.synthesize(&m.u)),
            v: GridFunction::from_parts_unchecked(self.grid, self.synthesize(&m.v)),
        }
    }

    fn multiply(&self, u: &GridFunction, exponent: f64) -> Result<GridFunction> {
        self.check(u)?;
        let c: Vec<f64> = self
            .coefficients(u.values())
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * l.powf(exponent))
            .collect();
        Ok(GridFunction::from_parts_unchecked(self.grid, self.synthesize(&c)))
    }

    /// `A^theta u`, multiplier `lambda_k^{theta/2}`.
    pub fn apply_power(&self, theta: f64, u: &GridFunction) -> Result<GridFunction> {
        check_closed(theta)?;
        self.multiply(u, 0.5 * theta)
    }

    /// `A^{-theta} w`, multiplier `lambda_k^{-theta/2}`.
    pub fn apply_inverse_power(&self, theta: f64, w: &GridFunction) -> Result<GridFunction> {
        if !(theta > 0.0 && theta <= 2.0) {
            return Err(Error::ThetaOutOfRange(theta));
        }
        self.multiply(w, -0.5 * theta)
    }

    /// `(sum_k lambda_k^theta u_k^2)^{1/2}`.
    pub fn etheta_norm(&self, theta: f64, u: &GridFunction) -> Result<f64> {
        check_closed(theta)?;
        self.check(u)?;
        Ok(self.modal_etheta_sq(theta, &self.coefficients(u.values())).sqrt())
    }

    /// `(u, w)_{E^theta}`.
    pub fn etheta_inner(&self, theta: f64, u: &GridFunction, w: &GridFunction) -> Result<f64> {
        check_closed(theta)?;
        self.check(u)?;
        self.check(w)?;
        let (a, b) = (self.coefficients(u.values()), self.coefficients(w.values()));
        Ok(self.eigenvalues.iter().zip(a.iter().zip(&b)).map(|(l, (x, y))| l.powf(theta) * x * y).sum())
    }

    pub(crate) fn modal_etheta_sq(&self, theta: f64, c: &[f64]) -> f64 {
        self.eigenvalues.iter().zip(c).map(|(l, x)| l.powf(theta) * x * x).sum()
    }

    /// Product-space inner product on `E^theta x E^{2-theta}` in modal form.
    pub fn modal_e_inner(&self, theta: f64, a: &ModalPair, b: &ModalPair) -> f64 {
        let mut acc = 0.0;
        for (k, l) in self.eigenvalues.iter().enumerate() {
            acc += l.powf(theta) * a.u[k] * b.u[k] + l.powf(2.0 - theta) * a.v[k] * b.v[k];
        }
        acc
    }

    /// `(z, w)_E = (u, phi)_{E^theta} + (v, psi)_{E^{2-theta}}`.
    pub fn e_inner(&self, theta: f64, z: &ProductElement, w: &ProductElement) -> Result<f64> {
        check_open(theta)?;
        Ok(self.modal_e_inner(theta, &self.to_modal(z)?, &self.to_modal(w)?))
    }

    pub fn e_norm(&self, theta: f64, z: &ProductElement) -> Result<f64> {
        check_open(theta)?;
        let m = self.to_modal(z)?;
        Ok(self.modal_e_inner(theta, &m, &m).sqrt())
    }

    pub(crate) fn modal_l(&self, theta: f64, z: &ModalPair) -> ModalPair {
        let mut out = ModalPair { u: vec![0.0; self.len()], v: vec![0.0; self.len()] };
        for (k, l) in self.eigenvalues.iter().enumerate() {
            out.u[k] = l.powf(1.0 - theta) * z.v[k];
            out.v[k] = l.powf(theta - 1.0) * z.u[k];
        }
        out
    }

    /// `L(u, v) = (A^{-theta} A^{2-theta} v, A^{-(2-theta)} A^theta u)`.
    pub fn apply_l(&self, theta: f64, z: &ProductElement) -> Result<ProductElement> {
        check_open(theta)?;
        let m = self.to_modal(z)?;
        Ok(self.from_modal(&self.modal_l(theta, &m)))
    }

    pub(crate) fn modal_project(&self, theta: f64, z: &ModalPair) -> (ModalPair, ModalPair) {
        let lz = self.modal_l(theta, z);
        let n = self.len();
        let mut plus = ModalPair { u: vec![0.0; n], v: vec![0.0; n] };
        let mut minus = plus.clone();
        for k in 0..n {
            plus.u[k] = 0.5 * (z.u[k] + lz.u[k]);
            plus.v[k] = 0.5 * (z.v[k] + lz.v[k]);
            minus.u[k] = z.u[k] - plus.u[k];
            minus.v[k] = z.v[k] - plus.v[k];
        }
        (plus, minus)
    }

    /// `(P+ z, P- z)` with `P+- = (I +- L) / 2`.
    pub fn project_pm(&self, theta: f64, z: &ProductElement) -> Result<(ProductElement, ProductElement)> {
        check_open(theta)?;
        let m = self.to_modal(z)?;
        let (p, _) = self.modal_project(theta, &m);
        let plus = self.from_modal(&p);
        // nodal complement: P+ z + P- z = z up to one rounding per node
        let minus = ProductElement {
            u: GridFunction::from_parts_unchecked(
                self.grid,
                z.u.values().iter().zip(plus.u.values()).map(|(a, b)| a - b).collect(),
            ),
            v: GridFunction::from_parts_unchecked(
                self.grid,
                z.v.values().iter().zip(plus.v.values()).map(|(a, b)| a - b).collect(),
            ),
        };
        Ok((plus, minus))
    }

    pub(crate) fn modal_quadratic(&self, z: &ModalPair) -> f64 {
        self.eigenvalues.iter().enumerate().map(|(k, l)| l * z.u[k] * z.v[k]).sum()
    }

    /// `Q(z) = int A^theta u A^{2-theta} v = sum_k lambda_k u_k v_k`.
    pub fn quadratic_form(&self, theta: f64, z: &ProductElement) -> Result<f64> {
        check_open(theta)?;
        Ok(self.modal_quadratic(&self.to_modal(z)?))
    }

    /// Element of `E+` (`sign = 1`) or `E-` (`sign = -1`) with first component `u`.
    pub fn eigenspace_element(&self, theta: f64, u: &GridFunction, sign: f64) -> Result<ProductElement> {
        check_open(theta)?;
        self.check(u)?;
        let c = self.coefficients(u.values());
        let v: Vec<f64> = c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| sign * l.powf(theta - 1.0) * c)
            .collect();
        Ok(ProductElement {
            u: u.clone(),
            v: GridFunction::from_parts_unchecked(self.grid, self.synthesize(&v)),
        })
    }
}

/// Summary line used by the spectrum export.
pub fn describe(e: &EigenSystem) -> String {
    format!(
        "N = {}, lambda_1 = {:.12e}, lambda_N = {:.12e}, orthonormality defect {:.3e}",
        e.len(),
        e.eigenvalues.first().copied().unwrap_or(f64::NAN),
        e.eigenvalues.last().copied().unwrap_or(f64::NAN),
        e.orthonormality_defect()
    )
}
