mod common;

use coherelab::rational::{harmonic_mean, ExtComplex, Polynomial, RationalTF};
use coherelab::Complex64;
use common::c;
use proptest::prelude::*;

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 1..=max_len)
}

/// Stable monic denominator built from real roots in `[-4, -0.2]`.
fn stable_den() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(-4.0..-0.2f64, 1..=3).prop_map(|r| Polynomial::from_roots(&r))
}

fn proper_tf() -> impl Strategy<Value = RationalTF> {
    (stable_den(), coeffs(3), 0.5..3.0f64).prop_map(|(den, num, gain)| {
        let num: Vec<f64> = num.into_iter().take(den.degree() + 1).collect();
        let num = Polynomial::new(num);
        let num = if num.is_zero() { Polynomial::constant(gain) } else { num };
        RationalTF::new(num, den).unwrap()
    })
}

fn value(g: &RationalTF, s: Complex64) -> Complex64 {
    g.eval(s).unwrap().finite().unwrap()
}

fn assert_close(a: Complex64, b: Complex64, tol: f64) {
    let scale = 1.0 + a.norm().max(b.norm());
    assert!((a - b).norm() <= tol * scale, "{a} vs {b}");
}

/// Evaluation point in the right half-plane, away from every stable pole.
fn rhp_point() -> impl Strategy<Value = Complex64> {
    (0.1..2.0f64, -3.0..3.0f64).prop_map(|(re, im)| c(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn text_form_round_trips(g in proper_tf()) {
        let back: RationalTF = g.to_string().parse().unwrap();
        prop_assert!(back.approx_eq(&g, 1e-12), "{g} -> {back}");
    }

    #[test]
    fn sum_and_product_evaluate_pointwise(a in proper_tf(), b in proper_tf(), s in rhp_point()) {
        let sum = a.add(&b).unwrap();
        let prod = a.mul(&b).unwrap();
        assert_close(value(&sum, s), value(&a, s) + value(&b, s), 1e-9);
        assert_close(value(&prod, s), value(&a, s) * value(&b, s), 1e-9);
    }

    #[test]
    fn difference_with_itself_is_zero(a in proper_tf()) {
        prop_assert!(a.sub(&a).unwrap().is_zero());
    }

    #[test]
    fn inverse_is_an_involution(a in proper_tf(), s in rhp_point()) {
        let inv = a.inv().unwrap();
        if let ExtComplex::Finite(v) = inv.eval(s).unwrap() {
            assert_close(v * value(&a, s), c(1.0, 0.0), 1e-9);
        }
        prop_assert!(inv.inv().unwrap().approx_eq(&a, 1e-9));
    }

    #[test]
    fn division_with_remainder_reconstructs(a in coeffs(6), b in coeffs(4)) {
        let (a, b) = (Polynomial::new(a), Polynomial::new(b));
        prop_assume!(!b.is_zero() && b.leading().abs() > 0.1);
        let (q, r) = a.div_rem(&b);
        prop_assert!(r.is_zero() || r.degree() < b.degree());
        let back = q.mul(&b).add(&r);
        for x in [-1.3, 0.0, 0.7, 2.1] {
            let (want, got) = (a.eval_real(x), back.eval_real(x));
            prop_assert!((want - got).abs() <= 1e-9 * (1.0 + want.abs()), "{want} vs {got}");
        }
    }

    #[test]
    fn roots_recover_distinct_real_factors(mut roots in prop::collection::vec(-6.0..6.0f64, 1..=6)) {
        roots.sort_by(f64::total_cmp);
        prop_assume!(roots.windows(2).all(|w| w[1] - w[0] > 0.2));
        prop_assume!(roots.iter().all(|r| r.abs() > 1e-3));
        let found = Polynomial::from_roots(&roots).roots();
        prop_assert_eq!(found.len(), roots.len());
        for r in &roots {
            let nearest = found.iter().map(|z| (z - c(*r, 0.0)).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-7, "root {} missed by {}", r, nearest);
        }
    }

    #[test]
    fn harmonic_mean_of_copies_is_the_original(g in proper_tf(), n in 1usize..=6) {
        let gbar = harmonic_mean(&vec![g.clone(); n]).unwrap();
        prop_assert!(gbar.approx_eq(&g, 1e-9), "{gbar} vs {g}");
    }

    #[test]
    fn polynomial_product_evaluates_pointwise(p in coeffs(6), q in coeffs(6), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let (p, q) = (Polynomial::new(p), Polynomial::new(q));
        let s = c(re, im);
        let want = p.eval(s) * q.eval(s);
        let got = p.mul(&q).eval(s);
        let scale = p.abs_scale(s) * q.abs_scale(s);
        prop_assert!((want - got).norm() <= 1e-12 * scale.max(1e-300), "{want} vs {got}");
    }

    #[test]
    fn zeros_are_poles_of_the_inverse(g in proper_tf()) {
        let zeros = g.zeros();
        let poles = g.inv().unwrap().poles();
        prop_assert_eq!(zeros.len(), poles.len());
        for z in &zeros {
            let nearest = poles.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-8, "zero {} unmatched ({})", z, nearest);
        }
    }

    #[test]
    fn harmonic_mean_matches_pointwise_formula(gs in prop::collection::vec(proper_tf(), 1..=5), s in rhp_point()) {
        let gbar = harmonic_mean(&gs).unwrap();
        let inv_sum: Complex64 = gs.iter().map(|g| 1.0 / value(g, s)).sum();
        match gbar.eval(s).unwrap() {
            ExtComplex::Finite(v) => assert_close(v * inv_sum, c(gs.len() as f64, 0.0), 1e-10),
            ExtComplex::AtInfinity => prop_assert!(inv_sum.norm() < 1e-8),
        }
    }
}

#[test]
fn canonical_form_is_unique_up_to_scaling() {
    let a = RationalTF::from_coeffs(&[2.0, 2.0], &[4.0, 2.0]).unwrap();
    let b = RationalTF::from_coeffs(&[1.0, 1.0], &[2.0, 1.0]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.den().leading(), 1.0);
}

#[test]
fn cancellation_removes_common_factors() {
    let g = RationalTF::new(Polynomial::from_roots(&[-1.0, -3.0]), Polynomial::from_roots(&[-1.0, -2.0, -5.0])).unwrap();
    let simplified = g.simplify(1e-8);
    assert_eq!(simplified.den().degree(), 2);
    assert_eq!(simplified.num().degree(), 1);
    assert!(simplified.approx_eq(&RationalTF::from_real_zpk(&[-3.0], &[-2.0, -5.0], 1.0).unwrap(), 1e-12));
}

#[test]
fn malformed_text_is_rejected() {
    for bad in ["", "num: 1 2", "num: 1 / den:", "num: a / den: 1", "num: 1 / den: 0"] {
        assert!(bad.parse::<RationalTF>().is_err(), "accepted {bad:?}");
    }
}
