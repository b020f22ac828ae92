//! Randomized invariants of the scalar and tensor layers.

mod common;

use pdlab::approx::{minimal_first_threshold, special_chain};
use pdlab::nfunc::{conjugate_value, omega_d1, omega_d2, omega_value, PdNFunction, ScalarNFunction};
use pdlab::tensor::{f_quantity, jacobian_action, stress, SymMat};
use proptest::prelude::*;

fn sym2() -> impl Strategy<Value = SymMat> {
    (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b, c)| SymMat::new2(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_gauss_quadrature(p in 1.1..8.0f64, delta in 0.0..5.0f64, t in 0.0..20.0f64) {
        let oracle = common::gauss_legendre(|s| (delta + s).powf(p - 2.0) * s, 0.0, t, 20, 64);
        let v = omega_value(p, delta, t).unwrap();
        prop_assert!((v - oracle).abs() <= 1e-9 * oracle.abs().max(1e-300) + 1e-300, "{v} vs {oracle}");
    }

    #[test]
    fn derivatives_are_positive_and_consistent(p in 1.1..8.0f64, delta in 0.01..5.0f64, t in 1e-3..50.0f64) {
        let d1 = omega_d1(p, delta, t).unwrap();
        let d2 = omega_d2(p, delta, t).unwrap();
        prop_assert!(d1 > 0.0 && d2 > 0.0);
        let h = 1e-6 * t;
        let fd = (omega_d1(p, delta, t + h).unwrap() - omega_d1(p, delta, t - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - d2).abs() <= 1e-5 * d2);
        let ratio = t * d2 / d1;
        prop_assert!(ratio >= (p - 1.0).min(1.0) * (1.0 - 1e-12) && ratio <= (p - 1.0).max(1.0) * (1.0 + 1e-12));
    }

    #[test]
    fn young_inequality_holds(p in 1.3..6.0f64, delta in 0.0..3.0f64, t in 0.01..10.0f64, u in 0.01..10.0f64) {
        let phi = PdNFunction::new(p, delta).unwrap();
        let rhs = phi.value(t) + conjugate_value(phi, u).unwrap();
        prop_assert!(t * u <= rhs * (1.0 + 1e-9));
    }

    #[test]
    fn stitched_levels_are_c2_and_a_nondecreasing(p in 2.2..9.0f64, delta in 0.05..4.0f64, a1 in 2.0..10.0f64) {
        let a1 = a1 + minimal_first_threshold(p, delta).unwrap().max(delta);
        let chain = special_chain(p, delta, a1, 1.0).unwrap();
        for m in chain.stitch_mismatch() {
            prop_assert!(m.iter().all(|&x| x <= 1e-9));
        }
        let top = chain.top();
        let mut prev = top.a(1e-3);
        for k in 1..400 {
            let t = 1e-3 * 1.03f64.powi(k);
            let a = top.a(t);
            prop_assert!(a >= prev * (1.0 - 1e-12));
            prev = a;
        }
    }

    #[test]
    fn stress_is_monotone_and_f_matches_coupling(p in 1.5..6.0f64, delta in 0.1..2.0f64, x in sym2(), y in sym2()) {
        let phi = PdNFunction::new(p, delta).unwrap();
        let ds = stress(&phi, &x) - stress(&phi, &y);
        prop_assert!(ds.dot(&(x - y)) >= -1e-12 * ds.norm() * (x - y).norm());
        let f = f_quantity(&phi, &x);
        prop_assert!((f.dot(&f) - stress(&phi, &x).dot(&x)).abs() <= 1e-10 * (1.0 + f.dot(&f)));
    }

    #[test]
    fn jacobian_matches_stress_differences(delta in 0.1..2.0f64, x in sym2(), q in sym2()) {
        let chain = special_chain(5.0, delta, 2.0, 1.0).unwrap();
        let top = chain.top();
        let h = 1e-7;
        let fd = (1.0 / (2.0 * h)) * (stress(&top, &(x + h * q)) - stress(&top, &(x - h * q)));
        let j = jacobian_action(&top, &x, &q, delta, 5.0).unwrap();
        prop_assert!((fd - j).norm() <= 1e-5 * (1.0 + j.norm()));
        prop_assert!(j.dot(&q) >= 0.0);
    }
}
