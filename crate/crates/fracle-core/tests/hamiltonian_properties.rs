use fracle_core::hamiltonian::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn power_euler_identity_is_an_equality(p in 1.1..6.0f64, q in 1.1..6.0f64, u in -20.0..20.0f64, v in -20.0..20.0f64) {
        let h = prototype_power(p, q).unwrap();
        let x = [0.3, 0.0];
        let lhs = (h.h_u)(x, u, v) * u / p + (h.h_v)(x, u, v) * v / q;
        let rhs = (h.h)(x, u, v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn audit_is_deterministic(seed in any::<u64>(), hw in 0.5..30.0f64) {
        let h = prototype_lane_emden(2.5, 3.5).unwrap();
        let b = AuditBox::square(hw);
        prop_assert_eq!(audit_growth(&h, &b, 200, seed).unwrap(), audit_growth(&h, &b, 200, seed).unwrap());
    }
}

#[test]
fn young_bound_holds_for_both_prototypes() {
    for h in [prototype_power(2.5, 4.0).unwrap(), prototype_lane_emden(3.0, 5.0).unwrap()] {
        let report = audit_growth(&h, &AuditBox::square(50.0), 5000, 11).unwrap();
        let young = report.condition("young").unwrap();
        assert_eq!(young.violations, 0, "{}", h.name);
        assert_eq!(young.checked, 5000);
        assert!(report.passed(), "{report:?}");
    }
}
