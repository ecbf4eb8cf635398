//! Hamiltonians `H(x, u, v)` with their partial derivatives and growth data.
//!
//! `p` and `q` are the growth exponents attached to `u` and `v` respectively:
//! for `|(u,v)| >= r`, `H_u u / p + H_v v / q >= H > 0`; below `r`,
//! `H <= c1 (|u|^p + |v|^q)`; and everywhere
//! `|H_u| <= c1 (|u|^{p-1} + |v|^{(p-1)q/p} + 1)`,
//! `|H_v| <= c1 (|u|^{(q-1)p/q} + |v|^{q-1} + 1)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Point;

pub type Evaluator = Arc<dyn Fn(Point, f64, f64) -> f64 + Send + Sync>;

/// Built-in families, with the parameters as written in their names.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prototype {
    Power { p: f64, q: f64 },
    LaneEmden { p: f64, q: f64 },
}

#[derive(Clone)]
pub struct HamiltonianSpec {
    pub name: String,
    pub prototype: Option<Prototype>,
    pub h: Evaluator,
    pub h_u: Evaluator,
    pub h_v: Evaluator,
    pub p: f64,
    pub q: f64,
    pub c1: f64,
    pub r: f64,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("c1", &self.c1)
            .field("r", &self.r)
            .finish()
    }
}

/// `sign(x) |x|^a`.
pub fn signed_pow(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(a)
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Hamiltonian exponents must exceed 1, got ({p}, {q})")))
    }
}

/// `H = |u|^p + |v|^q`.
pub fn prototype_power(p: f64, q: f64) -> Result<HamiltonianSpec> {
    check_exponents(p, q)?;
    Ok(HamiltonianSpec {
        name: format!("power({p},{q})"),
        prototype: Some(Prototype::Power { p, q }),
        h: Arc::new(move |_, u: f64, v: f64| u.abs().powf(p) + v.abs().powf(q)),
        h_u: Arc::new(move |_, u: f64, _| p * signed_pow(u, p - 1.0)),
        h_v: Arc::new(move |_, _, v: f64| q * signed_pow(v, q - 1.0)),
        p,
        q,
        c1: p.max(q),
        r: 1.0,
    })
}

/// `H = |v|^p / p + |u|^q / q`, so that `H_v = |v|^{p-2} v` and `H_u = |u|^{q-2} u`.
///
/// The growth exponent of `u` is `q` and that of `v` is `p`, so the returned
/// spec carries `(p, q)` swapped.
pub fn prototype_lane_emden(p: f64, q: f64) -> Result<HamiltonianSpec> {
    check_exponents(p, q)?;
    Ok(HamiltonianSpec {
        name: format!("lane_emden({p},{q})"),
        prototype: Some(Prototype::LaneEmden { p, q }),
        h: Arc::new(move |_, u: f64, v: f64| v.abs().powf(p) / p + u.abs().powf(q) / q),
        h_u: Arc::new(move |_, u: f64, _| signed_pow(u, q - 1.0)),
        h_v: Arc::new(move |_, _, v: f64| signed_pow(v, p - 1.0)),
        p: q,
        q: p,
        c1: 1.0,
        r: 1.0,
    })
}

/// Parses `power(p,q)` or `lane_emden(p,q)`.
pub fn parse(name: &str) -> Result<HamiltonianSpec> {
    let bad = || Error::InvalidParameter(format!("unknown Hamiltonian '{name}'; expected power(p,q) or lane_emden(p,q)"));
    let trimmed = name.trim();
    let open = trimmed.find('(').ok_or_else(bad)?;
    if !trimmed.ends_with(')') {
        return Err(bad());
    }
    let head = trimmed[..open].trim();
    let args: Vec<&str> = trimmed[open + 1..trimmed.len() - 1].split(',').collect();
    if args.len() != 2 {
        return Err(bad());
    }
    let p: f64 = args[0].trim().parse().map_err(|_| bad())?;
    let q: f64 = args[1].trim().parse().map_err(|_| bad())?;
    match head {
        "power" => prototype_power(p, q),
        "lane_emden" => prototype_lane_emden(p, q),
        _ => Err(bad()),
    }
}

impl HamiltonianSpec {
    /// `c H` with the constant `c1` scaled accordingly.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {c} must be positive")));
        }
        let (h, hu, hv) = (self.h.clone(), self.h_u.clone(), self.h_v.clone());
        Ok(Self {
            name: format!("{c}*{}", self.name),
            prototype: None,
            h: Arc::new(move |x, u, v| c * h(x, u, v)),
            h_u: Arc::new(move |x, u, v| c * hu(x, u, v)),
            h_v: Arc::new(move |x, u, v| c * hv(x, u, v)),
            c1: self.c1 * c.max(1.0),
            ..self.clone()
        })
    }

    /// Constant of `|H_u|, |H_v| <= C (|u|^p + |v|^q + 1)`.
    pub fn young_constant(&self) -> f64 {
        3.0 * self.c1
    }
}

/// Region of `(u, v)` values and the spatial points used by [`audit_growth`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditBox {
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub points: Vec<Point>,
}

impl AuditBox {
    pub fn square(half_width: f64) -> Self {
        Self {
            u: (-half_width, half_width),
            v: (-half_width, half_width),
            points: alloc::vec![[0.0, 0.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionAudit {
    pub condition: String,
    /// samples to which the condition applied
    pub checked: usize,
    pub violations: usize,
    /// smallest normalized margin; negative means violated
    pub worst_margin: f64,
    /// `(x, u, v)` at the worst margin
    pub worst_point: Option<[f64; 4]>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditReport {
    pub hamiltonian: String,
    pub samples: usize,
    pub seed: u64,
    pub conditions: Vec<ConditionAudit>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.violations == 0)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionAudit> {
        self.conditions.iter().find(|c| c.condition == name)
    }
}

const CONDITIONS: [&str; 6] = ["H1_positivity", "H1_superlinear", "H2", "H3", "C1", "young"];
const SLACK: f64 = 1e-10;
const C1_TOL: f64 = 1e-5;

fn margins(spec: &HamiltonianSpec, x: Point, u: f64, v: f64) -> [Option<f64>; 6] {
    let (p, q, c1) = (spec.p, spec.q, spec.c1);
    let h = (spec.h)(x, u, v);
    let hu = (spec.h_u)(x, u, v);
    let hv = (spec.h_v)(x, u, v);
    let norm = (u * u + v * v).sqrt();
    let power = u.abs().powf(p) + v.abs().powf(q);
    let rel = |a: f64, b: f64| (a - b) / a.abs().max(b.abs()).max(1.0);
    let mut out = [None; 6];
    if norm >= spec.r {
        out[0] = Some(h);
        let euler = hu * u / p + hv * v / q;
        out[1] = Some(rel(euler, h));
    } else {
        out[2] = Some(rel(c1 * power, h));
    }
    let bound_u = c1 * (u.abs().powf(p - 1.0) + v.abs().powf((p - 1.0) * q / p) + 1.0);
    let bound_v = c1 * (u.abs().powf((q - 1.0) * p / q) + v.abs().powf(q - 1.0) + 1.0);
    out[3] = Some(rel(bound_u, hu.abs()).min(rel(bound_v, hv.abs())));
    let step = |t: f64| 1e-6 * t.abs().max(1.0);
    let (du, dv) = (step(u), step(v));
    let fd_u = ((spec.h)(x, u + du, v) - (spec.h)(x, u - du, v)) / (2.0 * du);
    let fd_v = ((spec.h)(x, u, v + dv) - (spec.h)(x, u, v - dv)) / (2.0 * dv);
    // rounding in H(. + d) - H(. - d) alone contributes about eps |H| / d
    let noise = |d: f64| 4.0 * f64::EPSILON * h.abs().max(1.0) / d;
    let err_u = ((fd_u - hu).abs() - noise(du)).max(0.0) / hu.abs().max(1.0);
    let err_v = ((fd_v - hv).abs() - noise(dv)).max(0.0) / hv.abs().max(1.0);
    out[4] = Some(C1_TOL - err_u.max(err_v));
    let young = spec.young_constant() * (power + 1.0);
    out[5] = Some(rel(young, hu.abs()).min(rel(young, hv.abs())));
    out
}

/// Samples `(x, u, v)` uniformly from the box and records, for each growth
/// condition, the worst normalized margin. A clean report means no violation
/// was found among the samples, not that the conditions hold.
pub fn audit_growth(spec: &HamiltonianSpec, region: &AuditBox, samples: usize, seed: u64) -> Result<AuditReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter(String::from("audit needs at least one sample")));
    }
    if region.points.is_empty() {
        return Err(Error::InvalidParameter(String::from("audit needs at least one spatial point")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Point, f64, f64)> = (0..samples)
        .map(|_| {
            let x = region.points[rng.random_range(0..region.points.len())];
            let u = rng.random_range(region.u.0..=region.u.1);
            let v = rng.random_range(region.v.0..=region.v.1);
            (x, u, v)
        })
        .collect();
    let eval = |d: &(Point, f64, f64)| margins(spec, d.0, d.1, d.2);
    #[cfg(feature = "parallel")]
    let results: Vec<[Option<f64>; 6]> = {
        use rayon::prelude::*;
        draws.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<[Option<f64>; 6]> = draws.iter().map(eval).collect();

    let mut conditions = Vec::with_capacity(CONDITIONS.len());
    for (c, name) in CONDITIONS.iter().enumerate() {
        let mut audit = ConditionAudit {
            condition: name.to_string(),
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst_point: None,
            status: String::new(),
        };
        for (d, m) in draws.iter().zip(&results) {
            if let Some(margin) = m[c] {
                audit.checked += 1;
                let violated = if c == 0 { !(margin > 0.0) } else { !(margin >= -SLACK) };
                if violated {
                    audit.violations += 1;
                }
                if !(margin >= audit.worst_margin) {
                    audit.worst_margin = margin;
                    audit.worst_point = Some([d.0[0], d.0[1], d.1, d.2]);
                }
            }
        }
        audit.status = match (audit.checked, audit.violations) {
            (0, _) => String::from("not exercised"),
            (_, 0) => String::from("no violation found"),
            (_, k) => format!("violated at {k} samples"),
        };
        conditions.push(audit);
    }
    Ok(AuditReport { hamiltonian: spec.name.clone(), samples, seed, conditions })
}
