//! The energy `J(u, v) = int A^theta u A^{2-theta} v - int H(x, u, v)` on
//! `E^theta x E^{2-theta}`, its gradient, residuals of the discrete
//! Euler-Lagrange system, and the linking sets around the origin.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{same_grid, GridFunction, Point, Quadrature};
use crate::hamiltonian::HamiltonianSpec;
use crate::operators::OperatorMatrix;
use crate::spectral::{check_open, eig_decompose, EigenSystem, ModalPair, ProductElement};

pub struct EnergyFunctional {
    op: OperatorMatrix,
    eig: EigenSystem,
    theta: f64,
    hamiltonian: HamiltonianSpec,
    quadrature: Quadrature,
    nodes: Vec<Point>,
}

/// Residuals of a candidate `(u, v)` under each solution notion.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub theta_weak: f64,
    pub weak: f64,
    pub distributional: f64,
    pub finite_energy: Option<f64>,
    pub energy_value: f64,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.theta_weak
            .max(self.weak)
            .max(self.distributional)
            .max(self.finite_energy.unwrap_or(0.0))
    }
}

/// Nodal values of `H`, `H_u`, `H_v` at `z`.
pub(crate) struct Nonlinear {
    pub h: Vec<f64>,
    pub hu: Vec<f64>,
    pub hv: Vec<f64>,
}

impl EnergyFunctional {
    pub fn new(op: OperatorMatrix, theta: f64, hamiltonian: HamiltonianSpec) -> Result<Self> {
        let eig = eig_decompose(&op)?;
        Self::with_eigensystem(op, eig, theta, hamiltonian)
    }

    pub fn with_eigensystem(
        op: OperatorMatrix,
        eig: EigenSystem,
        theta: f64,
        hamiltonian: HamiltonianSpec,
    ) -> Result<Self> {
        check_open(theta)?;
        same_grid(op.grid(), eig.grid())?;
        let quadrature = Quadrature::new(op.grid());
        let nodes = op.grid().nodes().collect();
        Ok(Self { op, eig, theta, hamiltonian, quadrature, nodes })
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn hamiltonian(&self) -> &HamiltonianSpec {
        &self.hamiltonian
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    pub(crate) fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    fn check(&self, z: &ProductElement) -> Result<()> {
        same_grid(self.op.grid(), z.u.grid())?;
        same_grid(self.op.grid(), z.v.grid())
    }

    pub(crate) fn nonlinear(&self, u: &[f64], v: &[f64]) -> Result<Nonlinear> {
        let n = u.len();
        let mut out = Nonlinear { h: vec![0.0; n], hu: vec![0.0; n], hv: vec![0.0; n] };
        let ham = &self.hamiltonian;
        for i in 0..n {
            let x = self.nodes[i];
            let (a, b) = (u[i], v[i]);
            out.h[i] = (ham.h)(x, a, b);
            out.hu[i] = (ham.h_u)(x, a, b);
            out.hv[i] = (ham.h_v)(x, a, b);
            if !(out.h[i].is_finite() && out.hu[i].is_finite() && out.hv[i].is_finite()) {
                return Err(Error::HamiltonianOverflow { node: i, u: a, v: b });
            }
        }
        Ok(out)
    }

    fn integral(&self, f: &[f64]) -> f64 {
        self.quadrature.weights().iter().zip(f).map(|(w, x)| w * x).sum()
    }

    /// `Q(z) - int H(x, u, v)`.
    pub fn energy(&self, z: &ProductElement) -> Result<f64> {
        self.check(z)?;
        let nl = self.nonlinear(z.u.values(), z.v.values())?;
        let m = self.eig.to_modal(z)?;
        Ok(self.eig.modal_quadratic(&m) - self.integral(&nl.h))
    }

    /// `J'(z)(phi, psi)`, evaluated directly with the stiffness matrix.
    pub fn directional_derivative(&self, z: &ProductElement, w: &ProductElement) -> Result<f64> {
        self.check(z)?;
        self.check(w)?;
        let nl = self.nonlinear(z.u.values(), z.v.values())?;
        let ku = self.op.apply(z.u.values());
        let kv = self.op.apply(z.v.values());
        let quad: f64 = ku.iter().zip(w.v.values()).map(|(a, b)| a * b).sum::<f64>()
            + kv.iter().zip(w.u.values()).map(|(a, b)| a * b).sum::<f64>();
        let wts = self.quadrature.weights();
        let nonlin: f64 = (0..wts.len())
            .map(|i| wts[i] * (nl.hu[i] * w.u.values()[i] + nl.hv[i] * w.v.values()[i]))
            .sum();
        Ok(quad - nonlin)
    }

    /// Modal coefficients `(phi_k^T M H_u, phi_k^T M H_v)`.
    fn nonlinear_modal(&self, nl: &Nonlinear) -> ModalPair {
        ModalPair { u: self.eig.coefficients(&nl.hu), v: self.eig.coefficients(&nl.hv) }
    }

    pub(crate) fn modal_gradient(&self, m: &ModalPair, h: &ModalPair) -> ModalPair {
        let th = self.theta;
        let lam = self.eig.eigenvalues();
        let mut g = ModalPair { u: vec![0.0; lam.len()], v: vec![0.0; lam.len()] };
        for (k, l) in lam.iter().enumerate() {
            g.u[k] = (l * m.v[k] - h.u[k]) * l.powf(-th);
            g.v[k] = (l * m.u[k] - h.v[k]) * l.powf(th - 2.0);
        }
        g
    }

    /// Riesz representative of `J'(z)` in the product metric.
    pub fn gradient(&self, z: &ProductElement) -> Result<ProductElement> {
        self.check(z)?;
        let nl = self.nonlinear(z.u.values(), z.v.values())?;
        let m = self.eig.to_modal(z)?;
        let g = self.modal_gradient(&m, &self.nonlinear_modal(&nl));
        Ok(self.eig.from_modal(&g))
    }

    /// `|| gradient(z) ||_E`, the dual norm of `J'(z)`.
    pub fn theta_weak_residual(&self, z: &ProductElement) -> Result<f64> {
        self.dual_residual(z, self.theta)
    }

    fn dual_residual(&self, z: &ProductElement, theta: f64) -> Result<f64> {
        self.check(z)?;
        let nl = self.nonlinear(z.u.values(), z.v.values())?;
        let m = self.eig.to_modal(z)?;
        let h = self.nonlinear_modal(&nl);
        let mut acc = 0.0;
        for (k, l) in self.eig.eigenvalues().iter().enumerate() {
            let ru = l * m.v[k] - h.u[k];
            let rv = l * m.u[k] - h.v[k];
            acc += l.powf(-theta) * ru * ru + l.powf(theta - 2.0) * rv * rv;
        }
        Ok(acc.sqrt())
    }

    /// Residual in the dual of `E^1 x E^1`; reported only for `theta = 1`,
    /// where both components are tested in the energy space of the operator.
    pub fn finite_energy_residual(&self, z: &ProductElement) -> Result<Option<f64>> {
        if (self.theta - 1.0).abs() > 1e-12 {
            return Ok(None);
        }
        self.dual_residual(z, 1.0).map(Some)
    }

    /// Largest hat-function test value of `<K u, psi_i> - int H_v psi_i` (and
    /// the `v` counterpart), each divided by `||psi_i||_{L^2} = sqrt(w_i)`.
    pub fn weak_residual(&self, z: &ProductElement) -> Result<f64> {
        self.check(z)?;
        let nl = self.nonlinear(z.u.values(), z.v.values())?;
        let ku = self.op.apply(z.u.values());
        let kv = self.op.apply(z.v.values());
        let w = self.quadrature.weights();
        let mut worst = 0.0f64;
        for i in 0..w.len() {
            let a = (ku[i] - w[i] * nl.hv[i]).abs();
            let b = (kv[i] - w[i] * nl.hu[i]).abs();
            worst = worst.max(a.max(b) / w[i].sqrt());
        }
        Ok(worst)
    }

    /// Same tests with the operator moved onto the test function:
    /// `(u, (-Delta)^s psi_i)_{L^2} - int H_v psi_i`, where `(-Delta)^s psi_i`
    /// is the nodal function `M^{-1} K e_i`.
    pub fn distributional_residual(&self, z: &ProductElement) -> Result<f64> {
        self.check(z)?;
        let nl = self.nonlinear(z.u.values(), z.v.values())?;
        let w = self.quadrature.weights();
        let k = self.op.entries();
        let n = w.len();
        let mut worst = 0.0f64;
        let mut col = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                col[j] = k[(j, i)] / w[j];
            }
            let pu = self.quadrature.dot(z.u.values(), &col);
            let pv = self.quadrature.dot(z.v.values(), &col);
            let a = (pu - w[i] * nl.hv[i]).abs();
            let b = (pv - w[i] * nl.hu[i]).abs();
            worst = worst.max(a.max(b) / w[i].sqrt());
        }
        Ok(worst)
    }

    pub fn residuals(&self, z: &ProductElement) -> Result<ResidualReport> {
        Ok(ResidualReport {
            theta_weak: self.theta_weak_residual(z)?,
            weak: self.weak_residual(z)?,
            distributional: self.distributional_residual(z)?,
            finite_energy: self.finite_energy_residual(z)?,
            energy_value: self.energy(z)?,
        })
    }
}

/// `(|<(-Delta)^s u, phi>|, ||u||_{E^theta} ||phi||_{E^{2-theta}})`.
pub fn duality_bound_check(e: &EigenSystem, theta: f64, u: &GridFunction, phi: &GridFunction) -> Result<(f64, f64)> {
    check_open(theta)?;
    let z = ProductElement::new(u.clone(), phi.clone())?;
    let lhs = e.quadratic_form(theta, &z)?.abs();
    let rhs = e.etheta_norm(theta, u)? * e.etheta_norm(2.0 - theta, phi)?;
    Ok((lhs, rhs))
}

/// `(mu, nu)` with `mu/(mu+nu)` at the midpoint of `(1/p, 1 - 1/q)` and
/// `min(mu, nu) = 2`.
pub fn pick_munu(p: f64, q: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && q > 1.0) {
        return Err(Error::InvalidParameter(format!("exponents must exceed 1, got ({p}, {q})")));
    }
    let sum = 1.0 / p + 1.0 / q;
    if sum >= 1.0 {
        return Err(Error::Infeasible(sum));
    }
    let ratio = 0.5 * (1.0 / p + 1.0 - 1.0 / q);
    if ratio <= 0.5 {
        Ok((2.0, 2.0 * (1.0 - ratio) / ratio))
    } else {
        Ok((2.0 * ratio / (1.0 - ratio), 2.0))
    }
}

/// `1/p < mu/(mu+nu)` and `1/q < nu/(mu+nu)` with `mu, nu > 1`.
pub fn munu_admissible(p: f64, q: f64, mu: f64, nu: f64) -> bool {
    mu > 1.0 && nu > 1.0 && 1.0 / p < mu / (mu + nu) && 1.0 / q < nu / (mu + nu)
}

/// Parameters of the sets `S = B1 {z in E+ : ||z|| = rho}` and
/// `Q = B2 {t z+ + z : 0 <= t <= sigma, z in E-, ||z|| <= M}`, where
/// `B1 = diag(rho^{mu-1}, rho^{nu-1})` and `B2 = diag(sigma^{mu-1}, sigma^{nu-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkingGeometry {
    pub mu: f64,
    pub nu: f64,
    pub rho: f64,
    pub sigma: f64,
    pub big_m: f64,
    pub z_plus: ProductElement,
    pub delta: f64,
    pub theta: f64,
}

impl LinkingGeometry {
    /// Uses `z+ = (phi_k, lambda_k^{theta-1} phi_k)` for the zero-based mode `k`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e: &EigenSystem,
        theta: f64,
        (mu, nu): (f64, f64),
        rho: f64,
        sigma: f64,
        big_m: f64,
        mode: usize,
        delta: f64,
    ) -> Result<Self> {
        check_open(theta)?;
        if !(mu > 1.0 && nu > 1.0) {
            return Err(Error::InvalidParameter(format!("need mu, nu > 1, got ({mu}, {nu})")));
        }
        if !(rho > 0.0 && big_m > rho && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need rho > 0, M > rho, delta > 0; got rho = {rho}, M = {big_m}, delta = {delta}"
            )));
        }
        if mode >= e.len() {
            return Err(Error::InvalidParameter(format!("mode {mode} beyond {} eigenpairs", e.len())));
        }
        let z_plus = e.eigenspace_element(theta, &e.mode(mode), 1.0)?;
        let geom = Self { mu, nu, rho, sigma, big_m, z_plus, delta, theta };
        let bound = geom.sigma_bound(e)?;
        if !(sigma > bound) {
            return Err(Error::SigmaTooSmall { sigma, bound });
        }
        Ok(geom)
    }

    /// `rho / ||B1^{-1} B2 z+||`, evaluated at the current `sigma`.
    pub fn sigma_bound(&self, e: &EigenSystem) -> Result<f64> {
        let scaled = self.b1_inverse(&self.b2(&self.z_plus));
        Ok(self.rho / e.e_norm(self.theta, &scaled)?)
    }

    pub fn b1(&self, z: &ProductElement) -> ProductElement {
        ProductElement { u: z.u.scale(self.rho.powf(self.mu - 1.0)), v: z.v.scale(self.rho.powf(self.nu - 1.0)) }
    }

    pub fn b1_inverse(&self, z: &ProductElement) -> ProductElement {
        ProductElement { u: z.u.scale(self.rho.powf(1.0 - self.mu)), v: z.v.scale(self.rho.powf(1.0 - self.nu)) }
    }

    pub fn b2(&self, z: &ProductElement) -> ProductElement {
        ProductElement { u: z.u.scale(self.sigma.powf(self.mu - 1.0)), v: z.v.scale(self.sigma.powf(self.nu - 1.0)) }
    }
}

/// Which part of the sampled sets a point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LinkingFace {
    Sphere,
    Bottom,
    Top,
    Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkingSample {
    pub face: LinkingFace,
    /// preimage parameters: `t` along `z+` and the `E`-norm of the `E-` part,
    /// or the sphere radius for `S`
    pub t: f64,
    pub radius: f64,
    pub point: ProductElement,
}

/// Random unit element of `E+` (`sign = 1`) or `E-` (`sign = -1`) in the product metric.
fn random_direction(e: &EigenSystem, theta: f64, sign: f64, kind: usize, anchor: usize, rng: &mut ChaCha8Rng) -> ModalPair {
    let n = e.len();
    let lam = e.eigenvalues();
    let mut u = vec![0.0; n];
    match kind {
        0 => u[anchor] = if rng.random::<bool>() { 1.0 } else { -1.0 },
        1 => {
            let k = rng.random_range(0..n.min(8));
            u[k] = 1.0;
        }
        _ => {
            for (k, c) in u.iter_mut().enumerate() {
                let g: f64 = rng.sample(StandardNormal);
                *c = g * lam[k].powf(-0.5 * theta);
            }
        }
    }
    let v: Vec<f64> = u.iter().zip(lam).map(|(c, l)| sign * l.powf(theta - 1.0) * c).collect();
    let mut m = ModalPair { u, v };
    let norm = e.modal_e_inner(theta, &m, &m).sqrt();
    for k in 0..n {
        m.u[k] /= norm;
        m.v[k] /= norm;
    }
    m
}

/// Deterministic samples of `S` and of the three faces of `dQ`.
pub fn linking_sets(
    e: &EigenSystem,
    geom: &LinkingGeometry,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<LinkingSample>, Vec<LinkingSample>)> {
    let bound = geom.sigma_bound(e)?;
    if !(geom.sigma > bound) {
        return Err(Error::SigmaTooSmall { sigma: geom.sigma, bound });
    }
    let theta = geom.theta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor = {
        let zp = e.to_modal(&geom.z_plus)?;
        (0..e.len()).max_by(|&a, &b| zp.u[a].abs().total_cmp(&zp.u[b].abs())).unwrap_or(0)
    };
    let mut sphere = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let d = random_direction(e, theta, 1.0, j % 3, anchor, &mut rng);
        let pre = e.from_modal(&d).scale(geom.rho);
        sphere.push(LinkingSample { face: LinkingFace::Sphere, t: 0.0, radius: geom.rho, point: geom.b1(&pre) });
    }
    let mut boundary = Vec::with_capacity(n_samples + 1);
    boundary.push(LinkingSample {
        face: LinkingFace::Bottom,
        t: 0.0,
        radius: 0.0,
        point: ProductElement::zeros(*e.grid()),
    });
    for j in 0..n_samples {
        let face = match j % 3 {
            0 => LinkingFace::Bottom,
            1 => LinkingFace::Top,
            _ => LinkingFace::Side,
        };
        let d = e.from_modal(&random_direction(e, theta, -1.0, (j / 3) % 3, anchor, &mut rng));
        let (t, radius) = match face {
            LinkingFace::Bottom => (0.0, geom.big_m * rng.random::<f64>()),
            LinkingFace::Top => (geom.sigma, geom.big_m * rng.random::<f64>()),
            _ => (geom.sigma * rng.random::<f64>(), geom.big_m),
        };
        let pre = geom.z_plus.combine(t, &d, radius)?;
        boundary.push(LinkingSample { face, t, radius, point: geom.b2(&pre) });
    }
    Ok((sphere, boundary))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkingReport {
    pub min_on_s: f64,
    pub argmin: LinkingSample,
    pub max_on_boundary: f64,
    pub argmax: LinkingSample,
    pub delta: f64,
    pub i4_pass: bool,
    pub i5_pass: bool,
}

/// Sampled `min J` on `S` and `max J` on `dQ`.
pub fn verify_i4_i5(f: &EnergyFunctional, geom: &LinkingGeometry, n_samples: usize, seed: u64) -> Result<LinkingReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(String::from("need at least one sample")));
    }
    let ham = f.hamiltonian();
    if !munu_admissible(ham.p, ham.q, geom.mu, geom.nu) {
        return Err(Error::InvalidParameter(format!(
            "(mu, nu) = ({}, {}) not admissible for (p, q) = ({}, {})",
            geom.mu, geom.nu, ham.p, ham.q
        )));
    }
    if geom.theta != f.theta() {
        return Err(Error::ThetaOutOfRange(geom.theta));
    }
    let (sphere, boundary) = linking_sets(f.eigensystem(), geom, n_samples, seed)?;
    let extreme = |samples: Vec<LinkingSample>, max: bool| -> Result<(f64, LinkingSample)> {
        let mut best: Option<(f64, LinkingSample)> = None;
        for s in samples {
            let j = f.energy(&s.point)?;
            let better = match &best {
                None => true,
                Some((b, _)) => (max && j > *b) || (!max && j < *b),
            };
            if better {
                best = Some((j, s));
            }
        }
        Ok(best.expect("nonempty sample set"))
    };
    let (min_on_s, argmin) = extreme(sphere, false)?;
    let (max_on_boundary, argmax) = extreme(boundary, true)?;
    Ok(LinkingReport {
        min_on_s,
        argmin,
        max_on_boundary,
        argmax,
        delta: geom.delta,
        i4_pass: min_on_s >= geom.delta,
        i5_pass: max_on_boundary <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvertibilityReport {
    pub omega: f64,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    /// `max |L^2 - I|` over the modal 2x2 blocks
    pub involution_defect: f64,
    pub passed: bool,
}

/// Invertibility of `P_X B1^{-1} exp(omega L) B2` on `X = E-`.
///
/// `L` acts on each eigenmode as the 2x2 block `[[0, a], [1/a, 0]]` with
/// `a = lambda^{1-theta}`, so `exp(omega L) = cosh(omega) I + sinh(omega) L` and
/// the restricted operator is diagonal in the `E-` basis `(1, -1/a)` per mode.
pub fn verify_i3(e: &EigenSystem, theta: f64, geom: &LinkingGeometry, omega: f64) -> Result<InvertibilityReport> {
    check_open(theta)?;
    if !(omega >= 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be nonnegative")));
    }
    let (ch, sh) = (omega.cosh(), omega.sinh());
    let b1i = [geom.rho.powf(1.0 - geom.mu), geom.rho.powf(1.0 - geom.nu)];
    let b2 = [geom.sigma.powf(geom.mu - 1.0), geom.sigma.powf(geom.nu - 1.0)];
    let mut defect = 0.0f64;
    let mut smin = f64::INFINITY;
    let mut smax = 0.0f64;
    for &l in e.eigenvalues() {
        let a = l.powf(1.0 - theta);
        let lmat = [[0.0, a], [1.0 / a, 0.0]];
        let sq = [
            [lmat[0][1] * lmat[1][0], 0.0],
            [0.0, lmat[1][0] * lmat[0][1]],
        ];
        defect = defect.max((sq[0][0] - 1.0).abs()).max((sq[1][1] - 1.0).abs());
        // image of the E- basis vector (1, -1/a)
        let x = [b2[0], -b2[1] / a];
        let y = [ch * x[0] + sh * a * x[1], ch * x[1] + sh * x[0] / a];
        let w = [b1i[0] * y[0], b1i[1] * y[1]];
        // P- w = (w - L w)/2; its coordinate along (1, -1/a) is the first entry
        let c = 0.5 * (w[0] - a * w[1]);
        smin = smin.min(c.abs());
        smax = smax.max(c.abs());
    }
    Ok(InvertibilityReport {
        omega,
        smallest_singular_value: smin,
        largest_singular_value: smax,
        involution_defect: defect,
        passed: smin > 1e-10 && defect < 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::hamiltonian::{prototype_lane_emden, prototype_power};
    use crate::operators::assemble_integral_fraclap;

    fn functional(theta: f64) -> EnergyFunctional {
        let g = make_grid(1, &[(-1.0, 1.0)], &[40]).unwrap();
        let op = assemble_integral_fraclap(&g, 0.25).unwrap();
        EnergyFunctional::new(op, theta, prototype_lane_emden(3.0, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn origin_is_critical() {
        let f = functional(1.0);
        let z = ProductElement::zeros(*f.operator().grid());
        assert_eq!(f.energy(&z).unwrap(), 0.0);
        assert_eq!(f.gradient(&z).unwrap().sup_norm(), 0.0);
        let r = f.residuals(&z).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        assert_eq!(r.finite_energy, Some(0.0));
    }

    #[test]
    fn negative_space_has_negative_energy() {
        let f = functional(0.8);
        let e = f.eigensystem();
        let u = e.mode(0).combine(1.0, &e.mode(3), 0.5).unwrap();
        let z = e.eigenspace_element(0.8, &u, -1.0).unwrap();
        assert!(f.energy(&z).unwrap() < 0.0);
        assert!(f.finite_energy_residual(&z).unwrap().is_none());
    }

    #[test]
    fn munu_examples() {
        let (mu, nu) = pick_munu(3.0, 3.0).unwrap();
        assert_eq!((mu, nu), (2.0, 2.0));
        let (mu, nu) = pick_munu(2.2, 2.2).unwrap();
        assert!((mu - nu).abs() < 1e-14 && munu_admissible(2.2, 2.2, mu, nu));
        let (mu, nu) = pick_munu(2.5, 6.0).unwrap();
        assert!(mu.min(nu) == 2.0 && munu_admissible(2.5, 6.0, mu, nu));
        assert!(matches!(pick_munu(2.0, 2.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn duality_single_modes() {
        let f = functional(0.7);
        let e = f.eigensystem();
        let (lhs, rhs) = duality_bound_check(e, 0.7, &e.mode(0), &e.mode(0)).unwrap();
        assert!((lhs - e.eigenvalues()[0]).abs() < 1e-12 && (rhs - lhs).abs() < 1e-12);
        let (lhs, _) = duality_bound_check(e, 0.7, &e.mode(0), &e.mode(1)).unwrap();
        assert!(lhs < 1e-12);
    }

    #[test]
    fn geometry_rejects_small_sigma() {
        let f = functional(1.0);
        let e = f.eigensystem();
        let r = LinkingGeometry::new(e, 1.0, (2.0, 2.0), 1.0, 0.01, 5.0, 0, 0.1);
        assert!(matches!(r, Err(Error::SigmaTooSmall { .. })));
    }

    #[test]
    fn i3_at_zero_is_diagonal_scaling() {
        let f = functional(1.0);
        let e = f.eigensystem();
        let geom = LinkingGeometry::new(e, 1.0, (2.0, 3.0), 0.5, 2.0, 5.0, 0, 0.01).unwrap();
        let r = verify_i3(e, 1.0, &geom, 0.0).unwrap();
        // (rho^{1-mu} sigma^{mu-1} + rho^{1-nu} sigma^{nu-1}) / 2, equal in every mode
        let expect = 0.5 * (4.0 + 16.0);
        assert!((r.smallest_singular_value - expect).abs() < 1e-12 * expect);
        assert!((r.largest_singular_value - expect).abs() < 1e-12 * expect);
        assert!(r.passed);
    }

    #[test]
    fn power_prototype_energy_scaling() {
        let g = make_grid(1, &[(0.0, 1.0)], &[16]).unwrap();
        let op = assemble_integral_fraclap(&g, 0.5).unwrap();
        let f = EnergyFunctional::new(op, 1.0, prototype_power(3.0, 3.0).unwrap()).unwrap();
        let e = f.eigensystem();
        let z = ProductElement::new(e.mode(0), e.mode(0)).unwrap();
        let phi = e.mode(0);
        let h: f64 = 2.0 * f.quadrature().dot(&phi.values().iter().map(|v| v.abs().powi(3)).collect::<Vec<_>>(), &[1.0; 16]);
        assert!((f.energy(&z).unwrap() - (e.eigenvalues()[0] - h)).abs() < 1e-12);
    }
}
