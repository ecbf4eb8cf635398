use alloc::format;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// `C(n, s) = int_{R^n} |exp(-2 pi i h_1) - 1|^2 |h|^{-n-2s} dh`.
///
/// The transverse directions are integrated in closed form, leaving
/// `4 int_0^inf (1 - cos 2 pi h) h^{-1-2s} dh`, which is split into `[0, 1]`
/// (Gauss-Jacobi), unit periods up to a cutoff (Gauss-Legendre) and an
/// asymptotic tail. Two resolutions are compared for the error estimate.
pub fn fourier_constant(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let coarse = one_dimensional(s, 10, 32);
    let fine = one_dimensional(s, 20, 64);
    let estimate = (fine - coarse).abs();
    let tolerance = 1e-9 * fine.abs();
    if !(fine.is_finite() && fine > 0.0) || estimate > tolerance {
        return Err(Error::QuadratureNonConvergent {
            estimate,
            tolerance,
            detail: format!("C(1, {s}): {coarse} vs {fine}"),
        });
    }
    let transverse = if n == 1 {
        1.0
    } else {
        let nf = n as f64;
        PI.powf(0.5 * (nf - 1.0)) * libm::tgamma(s + 0.5) / libm::tgamma(0.5 * (nf + 2.0 * s))
    };
    Ok(fine * transverse)
}

fn one_dimensional(s: f64, order: usize, cutoff: usize) -> f64 {
    let alpha = 1.0 + 2.0 * s;
    let omega = 2.0 * PI;
    // [0, 1]: (1 - cos 2 pi h) h^{-1-2s} = h^{1-2s} * 2 sin^2(pi h) / h^2
    let gj = GaussRule::jacobi(order, 1.0 - 2.0 * s);
    let head: f64 = gj
        .nodes
        .iter()
        .zip(&gj.weights)
        .map(|(h, w)| {
            let sn = (PI * h).sin();
            w * 2.0 * sn * sn / (h * h)
        })
        .sum();
    let gl = GaussRule::legendre(order);
    let mut body = 0.0;
    for k in 1..cutoff {
        let a = k as f64;
        body += gl.integrate(a, a + 1.0, |h| {
            let sn = (PI * h).sin();
            2.0 * sn * sn * h.powf(-alpha)
        });
    }
    // int_K^inf cos(omega h) h^{-alpha} dh by repeated integration by parts (K integer)
    let k = cutoff as f64;
    let mut cos_tail = 0.0;
    let mut coeff = alpha;
    let mut sign = 1.0;
    for j in 0..8 {
        let jf = j as f64;
        cos_tail += sign * coeff * k.powf(-alpha - 1.0 - 2.0 * jf) / omega.powf(2.0 * jf + 2.0);
        coeff *= (alpha + 2.0 * jf + 1.0) * (alpha + 2.0 * jf + 2.0);
        sign = -sign;
    }
    let tail = k.powf(1.0 - alpha) / (alpha - 1.0) - cos_tail;
    4.0 * (head + body + tail)
}
