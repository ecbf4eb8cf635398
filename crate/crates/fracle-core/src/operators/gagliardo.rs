//! Gram matrices of the Gagliardo form
//! `1/2 iint (u(x)-u(y)) (phi(x)-phi(y)) K(x,y) dx dy` over piecewise-linear
//! hat functions on a uniform 1D grid, zero-extended outside the interval.

use alloc::vec::Vec;
use nalgebra::DMatrix;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grid::DomainGrid;
use crate::quadrature::GaussRule;

/// Reference coefficient `c_m` of the lattice form for `K = |x-y|^{-1-2s}`
/// with unit spacing: `a(psi_i, psi_j) = h^{1-2s} c_{|i-j|}`.
///
/// `c_m = -FP int |x + m|^{-1-2s} B3(x) dx` where `B3` is the centered cubic
/// B-spline (the autocorrelation of the unit hat). For small `m` this reduces to
/// a fourth difference of `|d|^{3-2s}`; for larger `m` the integral is regular
/// and is evaluated piecewise by Gauss-Legendre.
pub fn lattice_coefficient(m: usize, s: f64) -> f64 {
    if m <= 3 {
        lattice_coefficient_closed(m, s)
    } else {
        lattice_coefficient_regular(m, s)
    }
}

pub(crate) fn lattice_coefficient_closed(m: usize, s: f64) -> f64 {
    const W: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];
    // |d|^{3-2s} = d^2 |d|^eps with eps = 1-2s; the fourth difference of d^2
    // vanishes, so only expm1(eps ln|d|)/eps survives. Stable through s = 1/2.
    let eps = 1.0 - 2.0 * s;
    let mut acc = 0.0;
    for (j, w) in W.iter().enumerate() {
        let d = m as f64 + j as f64 - 2.0;
        if d == 0.0 {
            continue;
        }
        let l = d.abs().ln();
        let phi = if eps == 0.0 { l } else { libm::expm1(eps * l) / eps };
        acc += w * d * d * phi;
    }
    acc / (2.0 * s * (2.0 - 2.0 * s) * (3.0 - 2.0 * s))
}

pub(crate) fn lattice_coefficient_regular(m: usize, s: f64) -> f64 {
    debug_assert!(m >= 3);
    let rule = GaussRule::legendre(12);
    let mf = m as f64;
    let kernel = |x: f64| (x + mf).powf(-1.0 - 2.0 * s);
    let inner = |x: f64| {
        let a = x.abs();
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    };
    let outer = |x: f64| {
        let t = 2.0 - x.abs();
        t * t * t / 6.0
    };
    let mut total = 0.0;
    total += rule.integrate(-2.0, -1.0, |x| kernel(x) * outer(x));
    total += rule.integrate(-1.0, 0.0, |x| kernel(x) * inner(x));
    total += rule.integrate(0.0, 1.0, |x| kernel(x) * inner(x));
    total += rule.integrate(1.0, 2.0, |x| kernel(x) * outer(x));
    -total
}

/// Exact Gram matrix for the pure power kernel (symmetric Toeplitz).
pub fn integral_matrix(grid: &DomainGrid, s: f64) -> DMatrix<f64> {
    let n = grid.len();
    let h = grid.spacing()[0];
    let scale = h.powf(1.0 - 2.0 * s);
    let coeffs: Vec<f64> = (0..n).map(|m| scale * lattice_coefficient(m, s)).collect();
    DMatrix::from_fn(n, n, |i, j| coeffs[i.abs_diff(j)])
}

/// Kernel `K(x, y) = m(x, y) |x - y|^{-1-2s}` with a bounded symmetric modulation.
pub(crate) struct KernelQuadrature<'a> {
    pub s: f64,
    pub modulation: &'a (dyn Fn(f64, f64) -> f64 + Send + Sync),
    /// Exterior truncation radius; the remainder is added in closed form.
    pub radius: f64,
}

const SAME_ORDER: usize = 12;
const ADJ_ORDER: usize = 12;
const FAR_ORDER: usize = 8;

impl KernelQuadrature<'_> {
    /// Gram matrix by element-pair quadrature.
    ///
    /// Coincident and touching element pairs use Gauss-Jacobi rules that absorb
    /// the `|x-y|^{1-2s}` and `r^{2-2s}` behaviour of the integrand; separated
    /// pairs use a tensor Gauss-Legendre rule.
    pub fn assemble(&self, grid: &DomainGrid) -> DMatrix<f64> {
        let n = grid.len();
        let h = grid.spacing()[0];
        let a = grid.extent()[0].0;
        let s = self.s;
        let mut mat = DMatrix::<f64>::zeros(n, n);

        let same_t = GaussRule::jacobi(SAME_ORDER, 1.0 - 2.0 * s);
        let same_in = GaussRule::legendre(SAME_ORDER);
        let adj_r = GaussRule::jacobi(ADJ_ORDER, 2.0 - 2.0 * s);
        let adj_w = GaussRule::legendre(2 * ADJ_ORDER);
        let far = GaussRule::legendre(FAR_ORDER);

        let elements = n + 1;
        let x_of = |e: usize, xi: f64| a + (e as f64 + xi) * h;
        // interior dof of (element, local node)
        let dof = |e: usize, local: usize| -> Option<usize> {
            let node = e + local;
            (node >= 1 && node <= n).then(|| node - 1)
        };
        let shape = |local: usize, xi: f64| if local == 0 { 1.0 - xi } else { xi };
        let scale = h.powf(1.0 - 2.0 * s);

        for e in 0..elements {
            // coincident pair: D_a D_b = g'_a g'_b (xi - eta)^2
            let mut integral = 0.0;
            for (t, wt) in same_t.nodes.iter().zip(&same_t.weights) {
                let len = 1.0 - t;
                let mut inner = 0.0;
                for (u, wu) in same_in.nodes.iter().zip(&same_in.weights) {
                    let eta = u * len;
                    inner += wu * (self.modulation)(x_of(e, eta + t), x_of(e, eta));
                }
                integral += wt * inner * len;
            }
            // both orderings of (xi, eta), times the 1/2 of the form
            let block = scale * integral;
            for la in 0..2 {
                for lb in 0..2 {
                    if let (Some(i), Some(j)) = (dof(e, la), dof(e, lb)) {
                        let ga = if la == 0 { -1.0 } else { 1.0 };
                        let gb = if lb == 0 { -1.0 } else { 1.0 };
                        mat[(i, j)] += ga * gb * block;
                    }
                }
            }
        }

        // touching pairs (e, e+1), shared node at the right end of e
        for e in 0..elements - 1 {
            let f = e + 1;
            let mut local = [[0.0f64; 4]; 4];
            let dofs = [dof(e, 0), dof(e, 1), dof(f, 0), dof(f, 1)];
            // dofs[1] and dofs[2] are the same shared node
            for swap in [false, true] {
                for (r, wr) in adj_r.nodes.iter().zip(&adj_r.weights) {
                    for (w, ww) in adj_w.nodes.iter().zip(&adj_w.weights) {
                        let (sigma, eta) = if swap { (r * w, *r) } else { (*r, r * w) };
                        let xi = 1.0 - sigma;
                        let x = x_of(e, xi);
                        let y = x_of(f, eta);
                        // D / r for each of the four local functions
                        let d = [
                            shape(0, xi) / r,
                            (shape(1, xi) - shape(0, eta)) / r,
                            0.0,
                            -shape(1, eta) / r,
                        ];
                        let kern = (self.modulation)(x, y) * (1.0 + w).powf(-1.0 - 2.0 * s);
                        let weight = wr * ww * kern;
                        for p in [0, 1, 3] {
                            for q in [0, 1, 3] {
                                local[p][q] += weight * d[p] * d[q];
                            }
                        }
                    }
                }
            }
            // ordered pairs (e,f) and (f,e) together cancel the 1/2
            for p in [0usize, 1, 3] {
                for q in [0usize, 1, 3] {
                    if let (Some(i), Some(j)) = (dofs[p], dofs[q]) {
                        mat[(i, j)] += scale * local[p][q];
                    }
                }
            }
        }

        // separated pairs
        let mut xs = [0.0; FAR_ORDER];
        for e in 0..elements {
            for f in e + 2..elements {
                let mut local = [[0.0f64; 4]; 4];
                let dofs = [dof(e, 0), dof(e, 1), dof(f, 0), dof(f, 1)];
                for (k, xi) in far.nodes.iter().enumerate() {
                    xs[k] = x_of(e, *xi);
                }
                for (xi, wx) in far.nodes.iter().zip(&far.weights) {
                    let x = x_of(e, *xi);
                    for (eta, wy) in far.nodes.iter().zip(&far.weights) {
                        let y = x_of(f, *eta);
                        let dist = (f - e) as f64 + eta - xi;
                        let kern = (self.modulation)(x, y) * dist.powf(-1.0 - 2.0 * s);
                        let d = [shape(0, *xi), shape(1, *xi), -shape(0, *eta), -shape(1, *eta)];
                        let weight = wx * wy * kern;
                        for p in 0..4 {
                            for q in 0..4 {
                                local[p][q] += weight * d[p] * d[q];
                            }
                        }
                    }
                }
                for p in 0..4 {
                    for q in 0..4 {
                        if let (Some(i), Some(j)) = (dofs[p], dofs[q]) {
                            mat[(i, j)] += scale * local[p][q];
                        }
                    }
                }
            }
        }

        self.add_exterior(grid, &mut mat);
        mat
    }

    /// `int_{Omega^c} K(x, y) dy` split into the parts left and right of the interval.
    fn exterior_parts(&self, x: f64, lo: f64, hi: f64) -> (f64, f64) {
        let s = self.s;
        let rule = GaussRule::legendre(10);
        let side = |dist: f64, toward: f64| -> f64 {
            // y = boundary + toward * e, e in (0, inf); distance |x - y| = dist + e
            let boundary = if toward < 0.0 { lo } else { hi };
            let mut total = 0.0;
            let mut start = 0.0;
            let mut width = dist;
            while start < self.radius {
                let end = (start + width).min(self.radius);
                total += rule.integrate(start, end, |e| {
                    (self.modulation)(x, boundary + toward * e) * (dist + e).powf(-1.0 - 2.0 * s)
                });
                start = end;
                width *= 2.0;
            }
            let far = boundary + toward * self.radius;
            total + (self.modulation)(x, far) * (dist + self.radius).powf(-2.0 * s) / (2.0 * s)
        };
        (side(x - lo, -1.0), side(hi - x, 1.0))
    }

    fn add_exterior(&self, grid: &DomainGrid, mat: &mut DMatrix<f64>) {
        let n = grid.len();
        let h = grid.spacing()[0];
        let (lo, hi) = grid.extent()[0];
        let s = self.s;
        let gl = GaussRule::legendre(10);
        let gj = GaussRule::jacobi(10, 2.0 - 2.0 * s);
        let elements = n + 1;
        for e in 0..elements {
            let mut local = [[0.0f64; 2]; 2];
            let x_of = |xi: f64| lo + (e as f64 + xi) * h;
            let shapes = |xi: f64| [1.0 - xi, xi];
            if e == 0 {
                // only the right hat lives here; left exterior part ~ xi^{-2s}
                for (xi, w) in gj.nodes.iter().zip(&gj.weights) {
                    let (left, _) = self.exterior_parts(x_of(*xi), lo, hi);
                    local[1][1] += w * left * xi.powf(2.0 * s);
                }
                for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                    let (_, right) = self.exterior_parts(x_of(*xi), lo, hi);
                    local[1][1] += w * right * xi * xi;
                }
            } else if e == elements - 1 {
                // only the left hat lives here; mirror of the above with zeta = 1 - xi
                for (zeta, w) in gj.nodes.iter().zip(&gj.weights) {
                    let (_, right) = self.exterior_parts(x_of(1.0 - zeta), lo, hi);
                    local[0][0] += w * right * zeta.powf(2.0 * s);
                }
                for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                    let (left, _) = self.exterior_parts(x_of(*xi), lo, hi);
                    local[0][0] += w * left * (1.0 - xi) * (1.0 - xi);
                }
            } else {
                for (xi, w) in gl.nodes.iter().zip(&gl.weights) {
                    let (left, right) = self.exterior_parts(x_of(*xi), lo, hi);
                    let g = shapes(*xi);
                    for p in 0..2 {
                        for q in 0..2 {
                            local[p][q] += w * (left + right) * g[p] * g[q];
                        }
                    }
                }
            }
            for p in 0..2 {
                for q in 0..2 {
                    let (ni, nj) = (e + p, e + q);
                    if ni >= 1 && ni <= n && nj >= 1 && nj <= n {
                        mat[(ni - 1, nj - 1)] += h * local[p][q];
                    }
                }
            }
        }
    }
}
