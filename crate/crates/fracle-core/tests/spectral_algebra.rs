use std::sync::OnceLock;

use fracle_core::operators::{assemble_integral_fraclap, assemble_local};
use fracle_core::spectral::{eig_decompose, EigenSystem, ProductElement};
use fracle_core::{make_grid, GridFunction, Quadrature};
use proptest::prelude::*;

const N: usize = 40;

fn systems() -> &'static [EigenSystem; 2] {
    static CELL: OnceLock<[EigenSystem; 2]> = OnceLock::new();
    CELL.get_or_init(|| {
        let g1 = make_grid(1, &[(-1.0, 1.0)], &[N]).unwrap();
        let g2 = make_grid(2, &[(0.0, 1.0), (0.0, 2.0)], &[8, 5]).unwrap();
        [
            eig_decompose(&assemble_integral_fraclap(&g1, 0.5).unwrap()).unwrap(),
            eig_decompose(&assemble_local(&g2)).unwrap(),
        ]
    })
}

fn function(e: &EigenSystem, v: Vec<f64>) -> GridFunction {
    GridFunction::new(*e.grid(), v).unwrap()
}

fn diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.combine(1.0, b, -1.0).unwrap().sup_norm() / a.sup_norm().max(b.sup_norm()).max(1e-300)
}

fn pdiff(a: &ProductElement, b: &ProductElement) -> f64 {
    a.combine(1.0, b, -1.0).unwrap().sup_norm() / a.sup_norm().max(b.sup_norm()).max(1e-300)
}

fn vals() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn semigroup_and_inverse(which in 0usize..2, a in vals(), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let e = &systems()[which];
        let u = function(e, a);
        let lhs = e.apply_power(t1, &e.apply_power(t2, &u).unwrap()).unwrap();
        let rhs = e.apply_power(t1 + t2, &u).unwrap();
        prop_assert!(diff(&lhs, &rhs) < 1e-10);
        let back = e.apply_inverse_power(t1 + t2 + 1e-3, &e.apply_power(t1 + t2 + 1e-3, &u).unwrap()).unwrap();
        prop_assert!(diff(&back, &u) < 1e-10);
    }

    #[test]
    fn powers_are_self_adjoint(which in 0usize..2, a in vals(), b in vals(), t in 0.0..2.0f64) {
        let e = &systems()[which];
        let q = Quadrature::new(e.grid());
        let (u, w) = (function(e, a), function(e, b));
        let lhs = q.dot(e.apply_power(t, &u).unwrap().values(), w.values());
        let rhs = q.dot(u.values(), e.apply_power(t, &w).unwrap().values());
        let scale = e.etheta_norm(t, &u).unwrap() * e.etheta_norm(t, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn projection_algebra(which in 0usize..2, a in vals(), b in vals(), theta in 0.05..1.95f64) {
        let e = &systems()[which];
        let z = ProductElement::new(function(e, a), function(e, b)).unwrap();
        let (plus, minus) = e.project_pm(theta, &z).unwrap();
        let sum = plus.combine(1.0, &minus, 1.0).unwrap();
        // one rounding per node
        let big = plus.sup_norm().max(minus.sup_norm());
        prop_assert!(sum.combine(1.0, &z, -1.0).unwrap().sup_norm() <= f64::EPSILON * big);
        let (pp, pm) = e.project_pm(theta, &plus).unwrap();
        prop_assert!(pdiff(&pp, &plus) < 1e-10 && pm.sup_norm() <= 1e-10 * plus.sup_norm());
        let (mp, mm) = e.project_pm(theta, &minus).unwrap();
        prop_assert!(pdiff(&mm, &minus) < 1e-10 && mp.sup_norm() <= 1e-10 * minus.sup_norm());
        let zn = e.e_norm(theta, &z).unwrap();
        prop_assert!(e.e_inner(theta, &plus, &minus).unwrap().abs() <= 1e-9 * zn * zn);
        let l = e.apply_l(theta, &z).unwrap();
        prop_assert!(pdiff(&l, &plus.combine(1.0, &minus, -1.0).unwrap()) < 1e-10);
        prop_assert!(pdiff(&e.apply_l(theta, &l).unwrap(), &z) < 1e-10);
        let split = e.quadratic_form(theta, &plus).unwrap() - e.quadratic_form(theta, &minus).unwrap();
        prop_assert!((0.5 * zn * zn - split).abs() <= 1e-9 * zn * zn);
    }

    #[test]
    fn l_is_self_adjoint(which in 0usize..2, a in vals(), b in vals(), c in vals(), d in vals(), theta in 0.05..1.95f64) {
        let e = &systems()[which];
        let z = ProductElement::new(function(e, a), function(e, b)).unwrap();
        let w = ProductElement::new(function(e, c), function(e, d)).unwrap();
        let lhs = e.e_inner(theta, &e.apply_l(theta, &z).unwrap(), &w).unwrap();
        let rhs = e.e_inner(theta, &z, &e.apply_l(theta, &w).unwrap()).unwrap();
        let scale = e.e_norm(theta, &z).unwrap() * e.e_norm(theta, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }
}

#[test]
fn embedding_constant_is_grid_stable() {
    // lp_norm(u) / ||u||_{E^theta} over the first modes, across refinements
    let mut ratios = Vec::new();
    for n in [31usize, 63, 127] {
        let g = make_grid(1, &[(-1.0, 1.0)], &[n]).unwrap();
        let e = eig_decompose(&assemble_integral_fraclap(&g, 0.5).unwrap()).unwrap();
        let q = Quadrature::new(&g);
        let worst = (0..8)
            .map(|k| {
                let m = e.mode(k);
                fracle_core::lp_norm(&q, &m, 4.0).unwrap() / e.etheta_norm(1.0, &m).unwrap()
            })
            .fold(0.0, f64::max);
        ratios.push(worst);
    }
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    assert!(ratios[2] / ratios[0] < 1.5, "{ratios:?}");
}
