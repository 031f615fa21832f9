//! Closed forms and scaling relations.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use tfwlab::model::{
    c_lambda, critical_excess_bound, gamma_critical, nam_particle_bound, psi_cap_argmin, psi_cap_nonpositive_phi,
    scaling_constants, virial_residuals,
};
use tfwlab::{EnergyTerms, ModelParams};

proptest! {
    #[test]
    fn c_lambda_matches_five_thirds_closed_form(lambda in 1e-3f64..0.999) {
        let exact = 2.25 * PI * PI / (lambda * lambda * (1.0 - lambda));
        prop_assert!((c_lambda(5.0 / 3.0, lambda).unwrap() / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_lambda_is_convex(p in 1.52f64..1.98, lambda in 0.05f64..0.95) {
        let d = 1e-3;
        let f = |l: f64| c_lambda(p, l).unwrap().ln();
        prop_assert!(f(lambda - d) + f(lambda + d) - 2.0 * f(lambda) > 0.0);
    }

    #[test]
    fn scaling_is_multiplicative(
        p in 1.55f64..1.95,
        a1 in 0.2f64..5.0, a2 in 0.2f64..5.0,
        g1 in 0.2f64..5.0, g2 in 0.2f64..5.0,
    ) {
        let s1 = scaling_constants(p, a1, g1).unwrap();
        let s2 = scaling_constants(p, a2, g2).unwrap();
        let s12 = scaling_constants(p, a1 * a2, g1 * g2).unwrap();
        prop_assert!((s12.a_p / (s1.a_p * s2.a_p) - 1.0).abs() < 1e-12);
        prop_assert!((s12.b_p / (s1.b_p * s2.b_p) - 1.0).abs() < 1e-12);
        prop_assert!((s12.c_p / (s1.c_p * s2.c_p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_p_is_a_times_b(p in 1.55f64..1.95, a in 0.2f64..5.0, g in 0.2f64..5.0) {
        let s = scaling_constants(p, a, g).unwrap();
        prop_assert!((s.c_p / (a * s.b_p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn third_virial_residual_is_combination(
        t in 0.0f64..2.0, f in 0.0f64..2.0, a in 0.0f64..2.0, d in 0.0f64..2.0, p in 1.0f64..2.0,
    ) {
        let v = virial_residuals(&EnergyTerms { kinetic: t, tf: f, attraction: a, repulsion: d }, p);
        prop_assert!((v.r3 - (3.0 * t + (5.0 * p - 6.0) * f - a)).abs() < 1e-12);
    }

    #[test]
    fn critical_bound_decreases_to_zero(g1 in 0.5f64..10.0, g2 in 0.5f64..10.0) {
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let b_lo = critical_excess_bound(lo, 1.0).unwrap();
        let b_hi = critical_excess_bound(hi, 1.0).unwrap();
        prop_assert!(b_lo >= b_hi && b_hi >= 0.0);
    }
}

#[test]
fn psi_cap_is_minimum_over_lambda() {
    for p in [1.55, 5.0 / 3.0, 1.8, 1.95] {
        let e = 1.0 / (2.0 * p - 2.0);
        let scan = (1..100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|l| (c_lambda(p, l).unwrap() / l).powf(e))
            .fold(f64::INFINITY, f64::min);
        let cap = psi_cap_nonpositive_phi(p).unwrap();
        assert!(cap <= scan * (1.0 + 1e-12), "p = {p}: cap {cap} above scan {scan}");
        assert_relative_eq!(cap, scan, max_relative = 1e-8);
        let at = (c_lambda(p, psi_cap_argmin(p)).unwrap() / psi_cap_argmin(p)).powf(e);
        assert_relative_eq!(cap, at, max_relative = 1e-12);
    }
}

#[test]
fn psi_cap_at_five_thirds() {
    let expected = 2f64.powf(4.5) * PI.powf(1.5) * 3f64.powf(-0.75);
    assert_relative_eq!(psi_cap_nonpositive_phi(5.0 / 3.0).unwrap(), expected, max_relative = 1e-12);
}

#[test]
fn critical_constants() {
    assert_relative_eq!(gamma_critical(), 4.0 * PI.sqrt(), max_relative = 1e-15);
    assert_eq!(critical_excess_bound(gamma_critical(), 3.0).unwrap(), 0.0);
    assert_relative_eq!(
        critical_excess_bound(4.0, 1.0).unwrap(),
        (4.0 * PI.sqrt() - 4.0) / 4.0,
        max_relative = 1e-14
    );
    assert_relative_eq!(nam_particle_bound(1.0).unwrap(), 1.52105, max_relative = 1e-5);
}

#[test]
fn parameter_windows() {
    assert!(ModelParams::atom(0.9, 1.0, 1.0, 1.0).is_err());
    assert!(ModelParams::atom(5.0 / 3.0, -1.0, 1.0, 1.0).is_err());
    assert!(ModelParams::new(5.0 / 3.0, 1.0, 1.0, 1.0, 0).is_err());
    assert!(scaling_constants(1.5, 1.0, 1.0).is_err());
    assert!(c_lambda(2.0, 0.5).is_err());
}
