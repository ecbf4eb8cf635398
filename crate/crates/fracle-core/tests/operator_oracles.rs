use std::f64::consts::PI;
use std::sync::Arc;

use fracle_core::make_grid;
use fracle_core::operators::*;
use proptest::prelude::*;

#[allow(clippy::excessive_precision)]
const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];

fn gl(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL8.iter().map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

fn composite(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|k| gl(a + k as f64 * h, a + (k + 1) as f64 * h, &f)).sum()
}

/// Piecewise-linear interpolant on (0, 1) with zero boundary values.
fn hat(values: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    let h = 1.0 / (values.len() + 1) as f64;
    move |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let t = x / h;
        let k = (t.floor() as usize).min(values.len());
        let at = |i: usize| if i == 0 || i > values.len() { 0.0 } else { values[i - 1] };
        let frac = t - k as f64;
        at(k) * (1.0 - frac) + at(k + 1) * frac
    }
}

/// `1/2 iint (U(x)-U(y)) (F(x)-F(y)) |x-y|^{-1-2s}` over the plane, computed
/// as an integral over the offset `r = x - y` plus the exterior term.
fn gagliardo_direct(u: &[f64], f: &[f64], s: f64) -> f64 {
    let (uu, ff) = (hat(u), hat(f));
    let h = 1.0 / (u.len() + 1) as f64;
    let d = |r: f64| {
        let mut cuts: Vec<f64> = (0..=u.len() + 1).flat_map(|k| [k as f64 * h, k as f64 * h + r]).filter(|x| *x > r && *x < 1.0).collect();
        cuts.push(r);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2).map(|w| gl(w[0], w[1], |x| (uu(x) - uu(x - r)) * (ff(x) - ff(x - r)))).sum::<f64>()
    };
    let a = 1.0 / (2.0 - 2.0 * s);
    // r = h t^a absorbs r^{1-2s} on the first cell
    let near = h.powf(2.0 - 2.0 * s) * a * composite(0.0, 1.0, 40, |t| {
        let r = h * t.powf(a);
        d(r) / (r * r)
    });
    let far: f64 = (1..=u.len()).map(|k| gl(k as f64 * h, (k + 1) as f64 * h, |r| d(r) * r.powf(-1.0 - 2.0 * s))).sum();
    let kappa = |x: f64| (x.powf(-2.0 * s) + (1.0 - x).powf(-2.0 * s)) / (2.0 * s);
    let exterior: f64 = (0..=u.len()).map(|k| composite(k as f64 * h, (k + 1) as f64 * h, 20, |x| uu(x) * ff(x) * kappa(x))).sum();
    near + far + exterior
}

#[test]
fn gagliardo_pairing_matches_direct_double_integral() {
    let u = [0.3, 1.0, -0.4, 0.8, 0.5, -0.2, 0.9];
    let f = [1.0, 0.2, 0.6, -0.7, 0.1, 0.4, 0.3];
    let g = make_grid(1, &[(0.0, 1.0)], &[u.len()]).unwrap();
    for s in [0.25, 0.5, 0.75] {
        let op = assemble_integral_fraclap(&g, s).unwrap();
        let k = op.entries();
        let mut pairing = 0.0;
        for i in 0..u.len() {
            for j in 0..u.len() {
                pairing += u[i] * k[(i, j)] * f[j];
            }
        }
        let direct = gagliardo_direct(&u, &f, s);
        assert!(((pairing - direct) / direct).abs() < 0.01, "s = {s}: {pairing} vs {direct}");
    }
}

#[test]
fn gaussian_seminorm_matches_fourier_side() {
    let g = make_grid(1, &[(-12.0, 12.0)], &[1199]).unwrap();
    let u: Vec<f64> = g.nodes().map(|x| (-0.5 * x[0] * x[0]).exp()).collect();
    for s in [0.25, 0.5, 0.75] {
        let op = assemble_integral_fraclap(&g, s).unwrap();
        let ku = op.apply(&u);
        let form: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        // |u^(xi)|^2 = 2 pi exp(-4 pi^2 xi^2)
        let fourier = 2.0 * PI * libm::tgamma(s + 0.5) / (4.0 * PI * PI).powf(s + 0.5);
        let rhs = fourier_constant(1, s).unwrap() * fourier;
        // the assembled form carries the factor 1/2 of the symmetric double integral
        assert!(((2.0 * form - rhs) / rhs).abs() < 0.02, "s = {s}: {} vs {rhs}", 2.0 * form);
    }
}

fn kind_strategy() -> impl Strategy<Value = OperatorKind> {
    let leaf = prop_oneof![
        (0.1..0.9f64).prop_map(OperatorKind::IntegralFractional),
        (0.1..1.0f64).prop_map(OperatorKind::SpectralFractional),
        Just(OperatorKind::Local),
        (0.15..0.85f64, 0.0..0.9f64).prop_map(|(s, amp)| OperatorKind::Kernel(KernelSpec {
            s,
            modulation: Arc::new(move |x, y| 1.0 + amp * (x * y).cos()),
            lower: 1.0 - amp,
            upper: 1.0 + amp,
        })),
        (0.05..0.6f64).prop_map(|eps| OperatorKind::Convolution(ConvolutionSpec::triangle(eps))),
    ];
    prop_oneof![
        3 => leaf.clone(),
        1 => prop::collection::vec(leaf, 2..4).prop_map(OperatorKind::Sum),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assembled_operators_are_symmetric_positive_definite(
        kind in kind_strategy(),
        n in 6usize..24,
        a in 0.0..5.0f64,
    ) {
        let g = make_grid(1, &[(-1.0, 1.5)], &[n]).unwrap();
        let spec = OperatorSpec::new(kind).with_potential(move |x| a * x[0] * x[0]);
        let op = match assemble_generalized(&g, &spec) {
            Ok(op) => op,
            // a convolution alone may be only semidefinite on coarse grids
            Err(fracle_core::Error::PositivityViolated { .. }) if spec.kind.order().is_none() && a == 0.0 => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let k = op.entries();
        let scale = k.amax();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((k[(i, j)] - k[(j, i)]).abs() <= 1e-12 * scale);
            }
        }
        prop_assert!(op.lambda_min() > 0.0);
    }
}
