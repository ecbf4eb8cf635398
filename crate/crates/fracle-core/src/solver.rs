//! Critical points of the energy: Newton on the coupled Euler-Lagrange system,
//! Newton on the scalar reduction of the Lane-Emden system, and a sign-split
//! gradient flow.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::Error;
use crate::grid::GridFunction;
use crate::hamiltonian::{signed_pow, Prototype};
use crate::spectral::{ModalPair, ProductElement};
use crate::variational::{EnergyFunctional, ResidualReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    NewtonCoupled,
    Reduction,
    IndefiniteFlow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `(a phi_1, b phi_1)` from the one-mode Galerkin system, falling back
    /// to the energy maximum along the ray through `(phi_1, phi_1)`.
    PositiveMode,
    /// `u = v = amplitude * phi_k` (zero-based `k`).
    ScaledMode { k: usize, amplitude: f64 },
    Given(ProductElement),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::NewtonCoupled,
            tol: 1e-10,
            max_iter: 100,
            damping: 1.0,
            init: Init::PositiveMode,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(String::from("max_iter must be at least 1")));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping = {} outside (0, 1]", self.damping)));
        }
        Ok(())
    }
}

/// One iterate: energy, `||J'(z)||_E` and `||z||_E`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    pub energy: f64,
    pub grad_norm: f64,
    pub e_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub z: ProductElement,
    pub residuals: ResidualReport,
    pub energy: f64,
    pub iterations: usize,
    pub ps_trace: Vec<TraceEntry>,
    pub converged: bool,
    pub nontrivial: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("no convergence within {} iterations (residual {:e})", .0.iterations, .0.residuals.theta_weak)]
    MaxIterExceeded(Box<SolveReport>),
    #[error("singular Jacobian at iteration {}", .0.iterations)]
    SingularJacobian(Box<SolveReport>),
    #[error("converged to the trivial solution (||z||_E = {norm:e})")]
    ConvergedToTrivial { norm: f64, report: Box<SolveReport> },
    #[error("fractional power of a negative value at node {node} ({value:e})")]
    NegativePhase { node: usize, value: f64, report: Box<SolveReport> },
    #[error("gradient norm stagnated at {:e}", .0.residuals.theta_weak)]
    Stagnation(Box<SolveReport>),
    #[error(transparent)]
    Model(#[from] Error),
}

impl SolveError {
    /// The last iterate, when the failure happened inside an iteration.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            Self::MaxIterExceeded(r) | Self::SingularJacobian(r) | Self::Stagnation(r) => Some(r),
            Self::ConvergedToTrivial { report, .. } | Self::NegativePhase { report, .. } => Some(report),
            Self::Model(_) => None,
        }
    }
}

type SolveResult = Result<SolveReport, SolveError>;

fn initial_point(f: &EnergyFunctional, init: &Init) -> Result<ProductElement, Error> {
    let e = f.eigensystem();
    match init {
        Init::PositiveMode => {
            let z = ProductElement { u: e.mode(0), v: e.mode(0) };
            let t = ray_maximizer(f, &z)?.unwrap_or(1.0);
            let (a, b) = one_mode_galerkin(f, &e.mode(0), t)?.unwrap_or((t, t));
            Ok(ProductElement { u: z.u.scale(a), v: z.v.scale(b) })
        }
        Init::ScaledMode { k, amplitude } => {
            if *k >= e.len() {
                return Err(Error::InvalidParameter(format!("mode {k} beyond {} eigenpairs", e.len())));
            }
            let m = e.mode(*k).scale(*amplitude);
            Ok(ProductElement { u: m.clone(), v: m })
        }
        Init::Given(z) => {
            crate::grid::same_grid(z.grid(), f.operator().grid())?;
            Ok(z.clone())
        }
    }
}

/// The `t > 0` where `t -> J(t z)` peaks, when `Q(z) > 0` and the peak exists.
pub fn ray_maximizer(f: &EnergyFunctional, z: &ProductElement) -> Result<Option<f64>, Error> {
    if !(f.eigensystem().quadratic_form(f.theta(), z)? > 0.0) {
        return Ok(None);
    }
    let slope = |t: f64| match f.directional_derivative(&z.scale(t), z) {
        Err(Error::HamiltonianOverflow { .. }) => Ok(f64::NAN),
        other => other,
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut bracketed = false;
    for _ in 0..200 {
        let d = slope(hi)?;
        if !d.is_finite() {
            return Ok(None);
        }
        if d < 0.0 {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !bracketed {
        return Ok(None);
    }
    if lo == 0.0 {
        // shrink until the slope turns positive again
        loop {
            let t = 0.5 * hi;
            if t < 1e-300 {
                return Ok(None);
            }
            if slope(t)? > 0.0 {
                lo = t;
                break;
            }
            hi = t;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Positive root `(a, b)` of `d/da J(a phi, b phi) = d/db J(a phi, b phi) = 0`,
/// by damped Newton from `(t, t)`.
fn one_mode_galerkin(f: &EnergyFunctional, phi: &GridFunction, t: f64) -> Result<Option<(f64, f64)>, Error> {
    let zero = GridFunction::zeros(*phi.grid());
    let along_u = ProductElement { u: phi.clone(), v: zero.clone() };
    let along_v = ProductElement { u: zero, v: phi.clone() };
    let residual = |a: f64, b: f64| -> Result<Option<[f64; 2]>, Error> {
        let z = ProductElement { u: phi.scale(a), v: phi.scale(b) };
        match (f.directional_derivative(&z, &along_u), f.directional_derivative(&z, &along_v)) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => Ok(Some([x, y])),
            (Err(Error::HamiltonianOverflow { .. }), _) | (_, Err(Error::HamiltonianOverflow { .. })) | (Ok(_), Ok(_)) => Ok(None),
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    };
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let (mut a, mut b) = (t, t);
    let Some(mut r) = residual(a, b)? else { return Ok(None) };
    let scale = norm(r).max(1.0);
    for _ in 0..100 {
        if norm(r) <= 1e-12 * scale {
            return Ok((a > 0.0 && b > 0.0).then_some((a, b)));
        }
        let (ha, hb) = (fd_step(a), fd_step(b));
        let (Some(ra), Some(rb)) = (residual(a + ha, b)?, residual(a, b + hb)?) else { return Ok(None) };
        let j = [[(ra[0] - r[0]) / ha, (rb[0] - r[0]) / hb], [(ra[1] - r[1]) / ha, (rb[1] - r[1]) / hb]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Ok(None);
        }
        let da = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let db = -(j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            if na > 0.0 && nb > 0.0 {
                if let Some(nr) = residual(na, nb)? {
                    if norm(nr) < norm(r) {
                        (a, b, r) = (na, nb, nr);
                        break;
                    }
                }
            }
            step *= 0.5;
            if step < 1e-10 {
                return Ok(None);
            }
        }
    }
    Ok(None)
}

fn trace_entry(f: &EnergyFunctional, z: &ProductElement) -> Result<TraceEntry, Error> {
    Ok(TraceEntry {
        energy: f.energy(z)?,
        grad_norm: f.theta_weak_residual(z)?,
        e_norm: f.eigensystem().e_norm(f.theta(), z)?,
    })
}

fn report(f: &EnergyFunctional, method: Method, z: ProductElement, iterations: usize, trace: Vec<TraceEntry>, tol: f64) -> Result<SolveReport, Error> {
    let residuals = f.residuals(&z)?;
    let e_norm = f.eigensystem().e_norm(f.theta(), &z)?;
    Ok(SolveReport {
        method,
        energy: residuals.energy_value,
        converged: residuals.theta_weak <= tol,
        nontrivial: e_norm > 100.0 * tol,
        residuals,
        z,
        iterations,
        ps_trace: trace,
    })
}

fn finish(r: SolveReport) -> SolveResult {
    if !r.converged {
        return Err(SolveError::MaxIterExceeded(Box::new(r)));
    }
    if !r.nontrivial {
        let norm = r.ps_trace.last().map(|t| t.e_norm).unwrap_or(0.0);
        return Err(SolveError::ConvergedToTrivial { norm, report: Box::new(r) });
    }
    Ok(r)
}

pub fn solve(f: &EnergyFunctional, cfg: &SolverConfig) -> SolveResult {
    match cfg.method {
        Method::NewtonCoupled => solve_newton_coupled(f, cfg),
        Method::Reduction => solve_reduction(f, cfg),
        Method::IndefiniteFlow => solve_indefinite_flow(f, cfg),
    }
}

/// `sqrt(sum_i r_i^2 / w_i)` over both blocks.
fn merit(r: &[f64], w: &[f64]) -> f64 {
    let n = w.len();
    r.iter().enumerate().map(|(i, x)| x * x / w[i % n]).sum::<f64>().sqrt()
}

fn coupled_residual(f: &EnergyFunctional, u: &[f64], v: &[f64]) -> Result<Vec<f64>, Error> {
    let nl = f.nonlinear(u, v)?;
    let w = f.quadrature().weights();
    let ku = f.operator().apply(u);
    let kv = f.operator().apply(v);
    let n = u.len();
    let mut r = vec![0.0; 2 * n];
    for i in 0..n {
        r[i] = ku[i] - w[i] * nl.hv[i];
        r[n + i] = kv[i] - w[i] * nl.hu[i];
    }
    Ok(r)
}

/// Central-difference step. Large enough that rounding noise in the Jacobian
/// stays near `1e-12`, so iterates that agree to an ulp keep agreeing.
fn fd_step(t: f64) -> f64 {
    1e-4 * t.abs().max(1.0)
}

/// LU solve followed by one step of iterative refinement.
fn refined_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = a.clone().lu();
    let mut x = lu.solve(b)?;
    let r = b - a * &x;
    x += lu.solve(&r)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Damped Newton on `K u = M H_v(u, v)`, `K v = M H_u(u, v)`.
///
/// The pointwise second derivatives of `H` come from central differences of
/// `H_u` and `H_v`; each step is halved until the residual decreases.
pub fn solve_newton_coupled(f: &EnergyFunctional, cfg: &SolverConfig) -> SolveResult {
    cfg.validate()?;
    let method = Method::NewtonCoupled;
    let mut z = initial_point(f, &cfg.init)?;
    let n = z.u.values().len();
    let w = f.quadrature().weights().to_vec();
    let k = f.operator().entries();
    let ham = f.hamiltonian();
    let nodes = f.nodes();
    let grid = *z.grid();
    let mut trace = vec![trace_entry(f, &z)?];
    let mut res = coupled_residual(f, z.u.values(), z.v.values())?;
    for it in 0..cfg.max_iter {
        if trace[trace.len() - 1].grad_norm <= cfg.tol {
            return finish(report(f, method, z, it, trace, cfg.tol)?);
        }
        let (u, v) = (z.u.values(), z.v.values());
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        jac.view_mut((0, 0), (n, n)).copy_from(k);
        jac.view_mut((n, n), (n, n)).copy_from(k);
        for i in 0..n {
            let x = nodes[i];
            let (du, dv) = (fd_step(u[i]), fd_step(v[i]));
            let d = |g: &crate::hamiltonian::Evaluator, along_u: bool| {
                if along_u {
                    (g(x, u[i] + du, v[i]) - g(x, u[i] - du, v[i])) / (2.0 * du)
                } else {
                    (g(x, u[i], v[i] + dv) - g(x, u[i], v[i] - dv)) / (2.0 * dv)
                }
            };
            jac[(i, i)] -= w[i] * d(&ham.h_v, true);
            jac[(i, n + i)] -= w[i] * d(&ham.h_v, false);
            jac[(n + i, i)] -= w[i] * d(&ham.h_u, true);
            jac[(n + i, n + i)] -= w[i] * d(&ham.h_u, false);
        }
        let rhs = -DVector::from_column_slice(&res);
        let step = match refined_solve(&jac, &rhs) {
            Some(s) => s,
            None => {
                let r = report(f, method, z, it, trace, cfg.tol)?;
                return Err(SolveError::SingularJacobian(Box::new(r)));
            }
        };
        let current = merit(&res, &w);
        let mut alpha = cfg.damping;
        let mut accepted = None;
        for _ in 0..40 {
            let un: Vec<f64> = (0..n).map(|i| u[i] + alpha * step[i]).collect();
            let vn: Vec<f64> = (0..n).map(|i| v[i] + alpha * step[n + i]).collect();
            let rn = coupled_residual(f, &un, &vn)?;
            if merit(&rn, &w) < current || current == 0.0 {
                accepted = Some((un, vn, rn));
                break;
            }
            alpha *= 0.5;
        }
        let Some((un, vn, rn)) = accepted else {
            let r = report(f, method, z, it, trace, cfg.tol)?;
            return Err(SolveError::Stagnation(Box::new(r)));
        };
        z = ProductElement {
            u: GridFunction::new(grid, un)?,
            v: GridFunction::new(grid, vn)?,
        };
        res = rn;
        trace.push(trace_entry(f, &z)?);
    }
    finish(report(f, method, z, cfg.max_iter, trace, cfg.tol)?)
}

/// Newton on `u` alone for the Lane-Emden system: with
/// `v = sign(y)|y|^{1/(p-1)}`, `y = M^{-1} K u`, solve `K v(u) = M |u|^{q-2} u`.
///
/// Signed powers of `y` are used only for `p = q`; otherwise a negative entry of
/// `y` aborts with [`SolveError::NegativePhase`].
pub fn solve_reduction(f: &EnergyFunctional, cfg: &SolverConfig) -> SolveResult {
    cfg.validate()?;
    let method = Method::Reduction;
    let (p, q) = match f.hamiltonian().prototype {
        Some(Prototype::LaneEmden { p, q }) => (p, q),
        _ => {
            return Err(Error::Unsupported(format!(
                "the reduction needs a lane_emden Hamiltonian, got {}",
                f.hamiltonian().name
            ))
            .into())
        }
    };
    let symmetric = p == q;
    let a = 1.0 / (p - 1.0);
    let z0 = initial_point(f, &cfg.init)?;
    let grid = *z0.grid();
    let mut u = z0.u.values().to_vec();
    let n = u.len();
    let w = f.quadrature().weights().to_vec();
    let k = f.operator().entries().clone();

    let reconstruct = |u: &[f64]| -> Result<(Vec<f64>, Vec<f64>), (usize, f64)> {
        let ku = f.operator().apply(u);
        let y: Vec<f64> = ku.iter().zip(&w).map(|(a, m)| a / m).collect();
        if !symmetric {
            if let Some((i, val)) = y.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err((i, *val));
            }
        }
        let v = y.iter().map(|t| signed_pow(*t, a)).collect();
        Ok((y, v))
    };
    let residual = |u: &[f64], v: &[f64]| -> Vec<f64> {
        let kv = f.operator().apply(v);
        (0..n).map(|i| kv[i] - w[i] * signed_pow(u[i], q - 1.0)).collect()
    };
    let element = |u: &[f64], v: &[f64]| -> Result<ProductElement, Error> {
        Ok(ProductElement { u: GridFunction::new(grid, u.to_vec())?, v: GridFunction::new(grid, v.to_vec())? })
    };
    let negative = |f: &EnergyFunctional, u: &[f64], it: usize, trace: Vec<TraceEntry>, (node, value): (usize, f64)| -> SolveError {
        let z = ProductElement { u: GridFunction::from_parts_unchecked(grid, u.to_vec()), v: GridFunction::zeros(grid) };
        match report(f, method, z, it, trace, cfg.tol) {
            Ok(r) => SolveError::NegativePhase { node, value, report: Box::new(r) },
            Err(e) => SolveError::Model(e),
        }
    };

    let mut trace = Vec::new();
    let (mut y, mut v) = match reconstruct(&u) {
        Ok(r) => r,
        Err(bad) => return Err(negative(f, &u, 0, trace, bad)),
    };
    let mut z = element(&u, &v)?;
    trace.push(trace_entry(f, &z)?);
    let mut res = residual(&u, &v);
    for it in 0..cfg.max_iter {
        if trace[trace.len() - 1].grad_norm <= cfg.tol {
            return finish(report(f, method, z, it, trace, cfg.tol)?);
        }
        // d/du [K v(u)] = K diag(v'(y)) M^{-1} K
        let mut left = k.clone();
        for j in 0..n {
            let dv = if y[j] == 0.0 { 0.0 } else { a * y[j].abs().powf(a - 1.0) };
            left.column_mut(j).scale_mut(dv / w[j]);
        }
        let mut jac = left * &k;
        for i in 0..n {
            jac[(i, i)] -= w[i] * (q - 1.0) * u[i].abs().powf(q - 2.0);
        }
        let rhs = -DVector::from_column_slice(&res);
        let step = match refined_solve(&jac, &rhs) {
            Some(s) => s,
            None => return Err(SolveError::SingularJacobian(Box::new(report(f, method, z, it, trace, cfg.tol)?))),
        };
        let current = merit(&res, &w);
        let mut alpha = cfg.damping;
        let mut accepted = None;
        let mut last_bad = None;
        for _ in 0..40 {
            let un: Vec<f64> = (0..n).map(|i| u[i] + alpha * step[i]).collect();
            match reconstruct(&un) {
                Ok((yn, vn)) => {
                    let rn = residual(&un, &vn);
                    if merit(&rn, &w) < current {
                        accepted = Some((un, yn, vn, rn));
                        break;
                    }
                }
                Err(bad) => last_bad = Some((un, bad)),
            }
            alpha *= 0.5;
        }
        let Some((un, yn, vn, rn)) = accepted else {
            if let Some((un, bad)) = last_bad {
                return Err(negative(f, &un, it, trace, bad));
            }
            return Err(SolveError::Stagnation(Box::new(report(f, method, z, it, trace, cfg.tol)?)));
        };
        u = un;
        y = yn;
        v = vn;
        res = rn;
        z = element(&u, &v)?;
        trace.push(trace_entry(f, &z)?);
    }
    finish(report(f, method, z, cfg.max_iter, trace, cfg.tol)?)
}

const FLOW_WINDOW: usize = 10;

/// Flow `z <- z - tau L grad J(z)`: descent on `E+`, ascent on `E-`.
///
/// After every step the iterate is moved to the maximum of the energy along its
/// ray, which removes the unstable radial direction of a mountain-pass critical
/// point. The step is halved whenever the gradient norm has not improved over a
/// window of iterations.
pub fn solve_indefinite_flow(f: &EnergyFunctional, cfg: &SolverConfig) -> SolveResult {
    cfg.validate()?;
    let method = Method::IndefiniteFlow;
    let e = f.eigensystem();
    let theta = f.theta();
    let z0 = initial_point(f, &cfg.init)?;
    let mut m = e.to_modal(&z0)?;
    let mut tau = cfg.damping;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_at = 0usize;
    let nodal = |m: &ModalPair| e.from_modal(m);
    for it in 0..=cfg.max_iter {
        let z = nodal(&m);
        let nl = f.nonlinear(z.u.values(), z.v.values())?;
        let h = ModalPair { u: e.coefficients(&nl.hu), v: e.coefficients(&nl.hv) };
        let g = f.modal_gradient(&m, &h);
        let gnorm = e.modal_e_inner(theta, &g, &g).sqrt();
        let znorm_sq = e.modal_e_inner(theta, &m, &m);
        trace.push(TraceEntry { energy: f.energy(&z)?, grad_norm: gnorm, e_norm: znorm_sq.sqrt() });
        if gnorm <= cfg.tol {
            return finish(report(f, method, z, it, trace, cfg.tol)?);
        }
        if it == cfg.max_iter {
            break;
        }
        if !gnorm.is_finite() {
            return Err(SolveError::MaxIterExceeded(Box::new(report(f, method, z, it, trace, cfg.tol)?)));
        }
        if gnorm < best {
            best = gnorm;
            best_at = it;
        } else if it - best_at >= FLOW_WINDOW {
            tau *= 0.5;
            best_at = it;
            if tau < 1e-12 {
                return Err(SolveError::Stagnation(Box::new(report(f, method, z, it, trace, cfg.tol)?)));
            }
        }
        let d = e.modal_l(theta, &g);
        for k in 0..e.len() {
            m.u[k] -= tau * d.u[k];
            m.v[k] -= tau * d.v[k];
        }
        if let Some(t) = ray_maximizer(f, &nodal(&m))? {
            for k in 0..e.len() {
                m.u[k] *= t;
                m.v[k] *= t;
            }
        }
    }
    let z = nodal(&m);
    Err(SolveError::MaxIterExceeded(Box::new(report(f, method, z, cfg.max_iter, trace, cfg.tol)?)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PalaisSmaleDiagnostic {
    pub entries: usize,
    pub final_grad_norm: f64,
    /// fraction of steps along which the gradient norm decreased
    pub decreasing_fraction: f64,
    pub monotone: bool,
    pub max_e_norm: f64,
    /// `max ||z||_E` over the first entry's norm (or 1 if that is smaller)
    pub growth: f64,
    pub bounded: bool,
}

/// Growth factor above which a trace is flagged as unbounded.
pub const PS_GROWTH_LIMIT: f64 = 1e3;

pub fn palais_smale_trace(report: &SolveReport) -> Result<PalaisSmaleDiagnostic, Error> {
    let t = &report.ps_trace;
    if t.len() < 2 {
        return Err(Error::InvalidParameter(format!("trace has {} entries, need at least 2", t.len())));
    }
    let steps = t.len() - 1;
    let down = t.windows(2).filter(|w| w[1].grad_norm <= w[0].grad_norm).count();
    let max_e_norm = t.iter().map(|e| e.e_norm).fold(0.0, f64::max);
    let growth = max_e_norm / t[0].e_norm.max(1.0);
    Ok(PalaisSmaleDiagnostic {
        entries: t.len(),
        final_grad_norm: t[steps].grad_norm,
        decreasing_fraction: down as f64 / steps as f64,
        monotone: down == steps,
        max_e_norm,
        growth,
        bounded: max_e_norm.is_finite() && growth < PS_GROWTH_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::hamiltonian::prototype_lane_emden;
    use crate::operators::assemble_integral_fraclap;

    fn functional(n: usize, p: f64, q: f64) -> EnergyFunctional {
        let g = make_grid(1, &[(-1.0, 1.0)], &[n]).unwrap();
        let op = assemble_integral_fraclap(&g, 0.25).unwrap();
        EnergyFunctional::new(op, 1.0, prototype_lane_emden(p, q).unwrap()).unwrap()
    }

    #[test]
    fn zero_init_is_trivial() {
        let f = functional(31, 3.0, 3.0);
        let cfg = SolverConfig { init: Init::ScaledMode { k: 0, amplitude: 0.0 }, ..Default::default() };
        for method in [Method::NewtonCoupled, Method::Reduction, Method::IndefiniteFlow] {
            match solve(&f, &SolverConfig { method, ..cfg.clone() }) {
                Err(SolveError::ConvergedToTrivial { report, .. }) => assert_eq!(report.iterations, 0),
                other => panic!("{method:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn newton_and_reduction_agree() {
        let f = functional(63, 3.0, 3.0);
        let a = solve_newton_coupled(&f, &SolverConfig::default()).unwrap();
        let b = solve_reduction(&f, &SolverConfig { method: Method::Reduction, ..Default::default() }).unwrap();
        assert!(a.z.u.values().iter().all(|x| *x > 0.0));
        let diff = a.z.u.combine(1.0, &b.z.u, -1.0).unwrap().sup_norm();
        assert!(diff < 1e-8, "{diff}");
        assert!(a.residuals.max_residual() < 1e-8);
    }

    #[test]
    fn reduction_linear_smoke() {
        // p = q = 2 is linear: v = M^{-1} K u and G(phi_k) = (lambda_k^2 - 1) M phi_k,
        // so one undamped step lands on the only solution u = 0
        let f = functional(20, 2.0, 2.0);
        let e = f.eigensystem();
        let lam = e.eigenvalues()[2];
        let phi = e.mode(2);
        let kv = f.operator().apply(phi.scale(lam).values());
        let w = f.quadrature().weights();
        for i in 0..phi.values().len() {
            let g = kv[i] - w[i] * phi.values()[i];
            let expect = (lam * lam - 1.0) * w[i] * phi.values()[i];
            assert!((g - expect).abs() < 1e-9 * lam * lam);
        }
        let cfg = SolverConfig { method: Method::Reduction, init: Init::ScaledMode { k: 2, amplitude: 1.0 }, ..Default::default() };
        match solve_reduction(&f, &cfg) {
            Err(SolveError::ConvergedToTrivial { report, .. }) => assert_eq!(report.iterations, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymmetric_reduction_rejects_negative_phase() {
        let f = functional(31, 2.5, 3.5);
        let cfg = SolverConfig { method: Method::Reduction, init: Init::ScaledMode { k: 1, amplitude: 1.0 }, ..Default::default() };
        assert!(matches!(solve_reduction(&f, &cfg), Err(SolveError::NegativePhase { .. })));
    }

    #[test]
    fn flow_without_nonlinearity_decays() {
        let g = make_grid(1, &[(-1.0, 1.0)], &[31]).unwrap();
        let op = assemble_integral_fraclap(&g, 0.25).unwrap();
        let zero = crate::hamiltonian::HamiltonianSpec {
            h: alloc::sync::Arc::new(|_, _, _| 0.0),
            h_u: alloc::sync::Arc::new(|_, _, _| 0.0),
            h_v: alloc::sync::Arc::new(|_, _, _| 0.0),
            ..prototype_lane_emden(3.0, 3.0).unwrap()
        };
        let f = EnergyFunctional::new(op, 0.8, zero).unwrap();
        let e = f.eigensystem();
        let z = e.eigenspace_element(0.8, &e.mode(0), -1.0).unwrap().combine(1.0, &e.eigenspace_element(0.8, &e.mode(2), 1.0).unwrap(), 1.0).unwrap();
        let cfg = SolverConfig { method: Method::IndefiniteFlow, damping: 0.5, max_iter: 500, init: Init::Given(z), ..Default::default() };
        match solve(&f, &cfg) {
            Err(SolveError::ConvergedToTrivial { report, .. }) => assert!(report.residuals.theta_weak <= 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn palais_smale_requires_two_entries() {
        let f = functional(31, 3.0, 3.0);
        let r = solve_newton_coupled(&f, &SolverConfig::default()).unwrap();
        let d = palais_smale_trace(&r).unwrap();
        assert!(d.bounded && d.final_grad_norm <= 1e-10);
        let short = SolveReport { ps_trace: r.ps_trace[..1].to_vec(), ..r };
        assert!(palais_smale_trace(&short).is_err());
    }

    #[test]
    fn scaling_the_hamiltonian_rescales_the_solution() {
        // H = |u|^p + |v|^q; for c H the solution is (alpha u, beta v) with
        // alpha = c beta^{q-1}, beta = c alpha^{p-1}, and J scales by alpha beta
        let (p, q) = (3.0, 3.0);
        let g = make_grid(1, &[(-1.0, 1.0)], &[63]).unwrap();
        let op = assemble_integral_fraclap(&g, 0.25).unwrap();
        let ham = crate::hamiltonian::prototype_power(p, q).unwrap();
        let f = EnergyFunctional::new(op, 1.0, ham.clone()).unwrap();
        let base = solve_newton_coupled(&f, &SolverConfig::default()).unwrap();
        let c = 2.0;
        let scaled = EnergyFunctional::with_eigensystem(f.operator().clone(), f.eigensystem().clone(), 1.0, ham.scaled(c).unwrap()).unwrap();
        let r = solve_newton_coupled(&scaled, &SolverConfig::default()).unwrap();
        let alpha = c.powf(q / (1.0 - (p - 1.0) * (q - 1.0)));
        let beta = c * alpha.powf(p - 1.0);
        let du = r.z.u.combine(1.0, &base.z.u, -alpha).unwrap().sup_norm();
        let dv = r.z.v.combine(1.0, &base.z.v, -beta).unwrap().sup_norm();
        assert!(du < 1e-8 * r.z.u.sup_norm() && dv < 1e-8 * r.z.v.sup_norm(), "{du} {dv}");
        assert!((r.energy - alpha * beta * base.energy).abs() < 1e-8 * r.energy.abs());
    }

    #[test]
    fn flow_reaches_the_newton_solution() {
        let f = functional(63, 3.0, 3.0);
        let a = solve_newton_coupled(&f, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig { method: Method::IndefiniteFlow, damping: 0.5, max_iter: 2000, tol: 1e-9, ..Default::default() };
        let b = solve(&f, &cfg).unwrap();
        assert!(b.z.u.combine(1.0, &b.z.v, -1.0).unwrap().sup_norm() < 1e-10);
        assert!(a.z.u.combine(1.0, &b.z.u, -1.0).unwrap().sup_norm() < 1e-6);
        let d = palais_smale_trace(&b).unwrap();
        assert!(d.bounded);
    }
}
