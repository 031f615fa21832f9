//! Grid, quadrature, Hartree and Laplacian invariants.

use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;
use tfwlab::radial::{
    hartree_potential, integrate_density, laplacian_radial, make_grid, p_function, RadialGrid, RadialProfile,
};
use tfwlab::Error;

fn grid(r_min: f64, r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(make_grid(r_min, r_max, n).unwrap())
}

proptest! {
    #[test]
    fn grids_are_log_uniform_and_hit_endpoints(
        log_min in -8.0f64..-1.0,
        decades in 1.0f64..10.0,
        n in 2usize..3000,
    ) {
        let r_min = 10f64.powf(log_min);
        let r_max = r_min * 10f64.powf(decades);
        let g = make_grid(r_min, r_max, n).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(g.r_min(), r_min);
        prop_assert_eq!(g.r_max(), r_max);
        let q = g.ratio();
        for w in g.nodes().windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!((w[1] / w[0] / q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn p_function_commutes_with_restriction(start in 0usize..50, len in 3usize..50) {
        let g = grid(1e-3, 10.0, 120);
        let psi = RadialProfile::from_fn(g.clone(), |r| (-r).exp()).unwrap();
        let phi = RadialProfile::from_fn(g, |r| 1.0 / r - 0.3).unwrap();
        let range = start..start + len;
        let whole = p_function(&psi, &phi).unwrap().restrict(range.clone()).unwrap();
        let parts = p_function(&psi.restrict(range.clone()).unwrap(), &phi.restrict(range).unwrap()).unwrap();
        prop_assert_eq!(whole.values(), parts.values());
        prop_assert_eq!(whole.nodes(), parts.nodes());
    }

    #[test]
    fn density_integral_is_linear(a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let g = grid(1e-6, 50.0, 800);
        let f = RadialProfile::from_fn(g.clone(), |r| (-r).exp()).unwrap();
        let h = RadialProfile::from_fn(g.clone(), |r| (-2.0 * r).exp()).unwrap();
        let mix = RadialProfile::from_fn(g, |r| a * (-r).exp() + b * (-2.0 * r).exp()).unwrap();
        let lhs = integrate_density(&mix).unwrap();
        let rhs = a * integrate_density(&f).unwrap() + b * integrate_density(&h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }
}

#[test]
fn n_two_grid_is_allowed() {
    let g = make_grid(1.0, std::f64::consts::E, 2).unwrap();
    assert_eq!(g.nodes(), &[1.0, std::f64::consts::E]);
    assert_relative_eq!(g.h(), 1.0, max_relative = 1e-15);
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = RadialProfile::from_fn(grid(1e-3, 10.0, 50), |r| r).unwrap();
    let b = RadialProfile::from_fn(grid(1e-3, 10.0, 60), |r| r).unwrap();
    assert!(matches!(p_function(&a, &b), Err(Error::GridMismatch(_))));
}

#[test]
fn hartree_rejects_mass_at_the_grid_edge() {
    // A uniform ball filling the grid puts 99.9% of its mass in the outer decade.
    let g = grid(1e-6, 1.0, 4000);
    let rho = RadialProfile::from_fn(g, |_| 1.0).unwrap();
    let hart = hartree_potential(&rho);
    assert!(matches!(hart, Err(Error::GridTooSmall { .. })));
}

#[test]
fn hydrogenic_hartree_potential() {
    // ρ = e^{−2r}/π: V_H(r) = 1/r − (1 + 1/r)e^{−2r}.
    let g = grid(1e-6, 60.0, 8000);
    let rho = RadialProfile::from_fn(g, |r| (-2.0 * r).exp() / PI).unwrap();
    let v = hartree_potential(&rho).unwrap();
    for (&r, &x) in v.nodes().iter().zip(v.values()).step_by(97) {
        let exact = 1.0 / r - (1.0 + 1.0 / r) * (-2.0 * r).exp();
        assert_relative_eq!(x, exact, max_relative = 1e-5, epsilon = 1e-12);
    }
}

fn order(err: impl Fn(usize) -> f64, n: usize) -> f64 {
    (err(n) / err(2 * n)).log2()
}

#[test]
fn quadrature_is_second_order() {
    let exact = 8.0 * PI * (1.0 - 5.0 * (-2f64).exp());
    let err = |n: usize| {
        let rho = RadialProfile::from_fn(grid(1e-8, 2.0, n), |r| (-r).exp()).unwrap();
        (integrate_density(&rho).unwrap() - exact).abs()
    };
    for n in [200, 400, 800] {
        assert!(order(err, n) >= 1.9, "order {} at n = {n}", order(err, n));
    }
}

#[test]
fn laplacian_is_second_order() {
    let err = |n: usize| {
        let f = RadialProfile::from_fn(grid(0.1, 10.0, n), |r| (-r).exp()).unwrap();
        let lap = laplacian_radial(&f).unwrap();
        lap.valid
            .clone()
            .map(|i| {
                let r = f.nodes()[i];
                (lap.profile.values()[i] - (1.0 - 2.0 / r) * (-r).exp()).abs()
            })
            .fold(0.0, f64::max)
    };
    for n in [100, 200, 400] {
        assert!(order(err, n) >= 1.9, "order {} at n = {n}", order(err, n));
    }
}

#[test]
fn laplacian_flags_endpoints() {
    let f = RadialProfile::from_fn(grid(0.1, 10.0, 40), |r| r * r).unwrap();
    let lap = laplacian_radial(&f).unwrap();
    assert_eq!(lap.valid, 1..39);
    for i in lap.valid.clone() {
        assert_relative_eq!(lap.profile.values()[i], 6.0, max_relative = 1e-2);
    }
}
