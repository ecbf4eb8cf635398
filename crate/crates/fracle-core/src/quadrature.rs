//! Gauss rules on `[0, 1]` built with the Golub-Welsch algorithm.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss-Legendre rule with `n` points on `[0, 1]`.
    pub fn legendre(n: usize) -> Self {
        Self::jacobi(n, 0.0)
    }

    /// Gauss rule with `n` points for the weight `t^beta` on `[0, 1]`, `beta > -1`.
    ///
    /// `sum_k w_k f(t_k)` approximates `int_0^1 t^beta f(t) dt` and is exact for
    /// polynomials of degree `2n - 1`.
    pub fn jacobi(n: usize, beta: f64) -> Self {
        assert!(n >= 1 && beta > -1.0);
        // Jacobi weight (1-x)^a (1+x)^b on [-1, 1] with a = 0, b = beta.
        let (a, b) = (0.0f64, beta);
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (b - a) / (a + b + 2.0)
            } else {
                let t = 2.0 * kf + a + b;
                (b * b - a * a) / (t * (t + 2.0))
            };
            jm[(k, k)] = diag;
            if k + 1 < n {
                let m = kf + 1.0;
                let t = 2.0 * m + a + b;
                let beta_m = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1.0) * (t - 1.0));
                let off = beta_m.sqrt();
                jm[(k, k + 1)] = off;
                jm[(k + 1, k)] = off;
            }
        }
        let mu0 = (2.0f64).powf(a + b + 1.0) * libm::tgamma(a + 1.0) * libm::tgamma(b + 1.0)
            / libm::tgamma(a + b + 2.0);
        let eig = SymmetricEigen::new(jm);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let x = eig.eigenvalues[k];
                let v0 = eig.eigenvectors[(0, k)];
                (x, mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
        // map to [0, 1]: t = (1 + x) / 2, (1 + x)^b dx = 2^{b+1} t^b dt
        let scale = (2.0f64).powf(-(b + 1.0));
        Self {
            nodes: pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect(),
            weights: pairs.iter().map(|p| p.1 * scale).collect(),
        }
    }

    /// Applies the rule to `f` on `[lo, hi]` (plain Legendre use only).
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = hi - lo;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(lo + len * t))
            .sum::<f64>()
            * len
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
