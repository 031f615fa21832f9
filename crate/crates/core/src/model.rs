//! Problem parameters, closed-form constants and scaling relations.
//!
//! Everything here is pure arithmetic. Exponents such as `1/(2p−3)` blow up
//! as `p → 3/2`, so products of powers are assembled in log space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Lower bound on the universal Coulomb moment ratio used for `N ≤ 5Z/(4β)`.
pub const NAM_BETA: f64 = 0.8218;

/// Physical and coupling parameters of one problem instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Exponent of the generalized Thomas-Fermi term.
    pub p: f64,
    /// Coupling `γ` of the Thomas-Fermi term.
    pub gamma: f64,
    /// Weizsäcker coefficient `A`.
    pub big_a: f64,
    /// Nuclear charge.
    pub z: f64,
    /// Number of nuclei.
    pub k: u32,
}

impl ModelParams {
    /// Validated constructor for a single atom (`K = 1`).
    pub fn atom(p: f64, gamma: f64, big_a: f64, z: f64) -> Result<Self> {
        Self::new(p, gamma, big_a, z, 1)
    }

    /// Validated constructor.
    pub fn new(p: f64, gamma: f64, big_a: f64, z: f64, k: u32) -> Result<Self> {
        let params = Self { p, gamma, big_a, z, k };
        params.validate()?;
        Ok(params)
    }

    /// Checks the global invariants `p ∈ (1, 2]`, `γ, A, Z > 0`, `K ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        ensure(self.p > 1.0 && self.p <= 2.0, || {
            format!("p = {} must lie in (1, 2]", self.p)
        })?;
        ensure(self.gamma > 0.0 && self.gamma.is_finite(), || {
            format!("gamma = {} must be positive", self.gamma)
        })?;
        ensure(self.big_a > 0.0 && self.big_a.is_finite(), || {
            format!("A = {} must be positive", self.big_a)
        })?;
        ensure(self.z > 0.0 && self.z.is_finite(), || {
            format!("Z = {} must be positive", self.z)
        })?;
        ensure(self.k >= 1, || "K must be at least 1".to_string())
    }
}

/// The factors `(a_p, b_p, c_p)` of `ψ(x) = a_p ψ̃(b_p x)`, `Z = c_p Z̃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub a_p: f64,
    pub b_p: f64,
    pub c_p: f64,
}

/// The four terms of the TFW energy in the units of the solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    /// Kinetic (Weizsäcker) term `A∫|∇ψ|²`.
    pub kinetic: f64,
    /// Generalized Thomas-Fermi term `(γ/p)∫ψ^{2p}`.
    pub tf: f64,
    /// Nuclear attraction `∫Vψ²`.
    pub attraction: f64,
    /// Hartree repulsion `D[ψ²]`.
    pub repulsion: f64,
}

impl EnergyTerms {
    /// `T + F − A + D`.
    pub fn total(&self) -> f64 {
        self.kinetic + self.tf - self.attraction + self.repulsion
    }

    /// `T + F + A + D`, the natural scale for relative virial residuals.
    pub fn magnitude(&self) -> f64 {
        self.kinetic.abs() + self.tf.abs() + self.attraction.abs() + self.repulsion.abs()
    }
}

/// Residuals of the virial identities for a minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialResiduals {
    /// `T + pF − A + 2D`.
    pub r1: f64,
    /// `T + 3F − 2A + 5D`.
    pub r2: f64,
    /// `3T + (5p − 6)F − A`.
    pub r3: f64,
    /// Whether `3T ≤ A`; `None` when `p < 6/5`, where it is not asserted.
    pub kinetic_bound: Option<bool>,
}

fn check_open_window(p: f64, what: &str) -> Result<()> {
    ensure(p > 1.5 && p < 2.0, || format!("{what} requires 3/2 < p < 2, got p = {p}"))
}

/// Scaling constants `(a_p, b_p, c_p)` for `p > 3/2`.
pub fn scaling_constants(p: f64, big_a: f64, gamma: f64) -> Result<ScalingConstants> {
    ensure(p > 1.5 && p.is_finite(), || {
        format!("scaling is undefined for p = {p} (needs p > 3/2)")
    })?;
    ensure(big_a > 0.0 && gamma > 0.0, || {
        format!("A = {big_a} and gamma = {gamma} must be positive")
    })?;
    let la = big_a.ln();
    let lg = gamma.ln();
    let d = 4.0 * p - 6.0;
    Ok(ScalingConstants {
        a_p: (la / d - lg / (2.0 * p - 3.0)).exp(),
        b_p: ((2.0 - p) * la / d - lg / d).exp(),
        c_p: ((3.0 * p - 4.0) * la / d - lg / d).exp(),
    })
}

/// `ln c_p(λ)`, finite on the open window.
pub fn ln_c_lambda(p: f64, lambda: f64) -> Result<f64> {
    check_open_window(p, "c_p(lambda)")?;
    ensure(lambda > 0.0 && lambda < 1.0, || {
        format!("lambda = {lambda} must lie in (0, 1)")
    })?;
    let e1 = (p - 1.0) / (2.0 * p - 3.0);
    let e2 = (2.0 - p) / (2.0 * p - 3.0);
    Ok(e1 * (2.0 * PI).ln() - e1 * lambda.ln() - e2 * (1.0 - lambda).ln()
        + (2.0 * p - 3.0).ln()
        + e2 * (2.0 - p).ln()
        - 2.0 * e1 * (p - 1.0).ln())
}

/// The constant `c_p(λ)` in `λγψ^{2p−2} ≤ φ + c_p(λ)γ^{1/(3−2p)}`.
pub fn c_lambda(p: f64, lambda: f64) -> Result<f64> {
    ln_c_lambda(p, lambda).map(f64::exp)
}

/// Upper bound on `ψ` where `φ ≤ 0`, at `A = γ = 1`.
///
/// Equals `min_λ (c_p(λ)/λ)^{1/(2p−2)}`, attained at `λ = (3p−4)/(2p−2)`.
pub fn psi_cap_nonpositive_phi(p: f64) -> Result<f64> {
    check_open_window(p, "the nonpositive-potential cap")?;
    let d = 4.0 * p - 6.0;
    let ln_cap = 3.0 / d * 2f64.ln() + PI.ln() / d + (2.0 * p - 3.0).ln() / (2.0 * p - 2.0)
        - (3.0 * p - 4.0) / (2.0 * (p - 1.0) * (2.0 * p - 3.0)) * (3.0 * p - 4.0).ln();
    Ok(ln_cap.exp())
}

/// The `λ` at which the cap of [`psi_cap_nonpositive_phi`] is attained.
pub fn psi_cap_argmin(p: f64) -> f64 {
    (3.0 * p - 4.0) / (2.0 * p - 2.0)
}

/// The critical coupling `γ_c = 4√π` at `p = 3/2`.
pub fn gamma_critical() -> f64 {
    4.0 * PI.sqrt()
}

/// Upper bound `5Z/(4β)` on the particle number.
pub fn nam_particle_bound(z: f64) -> Result<f64> {
    ensure(z > 0.0, || format!("Z = {z} must be positive"))?;
    Ok(5.0 / (4.0 * NAM_BETA) * z)
}

/// Excess-charge bound at `p = 3/2`: zero above `γ_c`, `((γ_c − γ)/γ)Z` below.
pub fn critical_excess_bound(gamma: f64, z: f64) -> Result<f64> {
    ensure(gamma > 0.0 && z > 0.0, || {
        format!("gamma = {gamma} and Z = {z} must be positive")
    })?;
    let gc = gamma_critical();
    Ok(if gamma >= gc { 0.0 } else { (gc - gamma) / gamma * z })
}

/// Residuals of the virial identities; each vanishes for an exact minimizer.
pub fn virial_residuals(terms: &EnergyTerms, p: f64) -> VirialResiduals {
    let EnergyTerms { kinetic: t, tf: f, attraction: a, repulsion: d } = *terms;
    let r1 = t + p * f - a + 2.0 * d;
    let r2 = t + 3.0 * f - 2.0 * a + 5.0 * d;
    VirialResiduals {
        r1,
        r2,
        r3: 5.0 * r1 - 2.0 * r2,
        kinetic_bound: (p >= 1.2).then_some(3.0 * t <= a),
    }
}

/// Rejects `p` outside the open window `(3/2, 2)`.
pub(crate) fn require_open_window(p: f64, what: &str) -> Result<()> {
    check_open_window(p, what)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scaling_is_identity_at_unit_couplings() {
        let s = scaling_constants(5.0 / 3.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(s.a_p, 1.0, max_relative = 1e-15);
        assert_relative_eq!(s.b_p, 1.0, max_relative = 1e-15);
        assert_relative_eq!(s.c_p, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn scaling_a_p_at_gamma_two() {
        let s = scaling_constants(5.0 / 3.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(s.a_p, 0.125, max_relative = 1e-13);
    }

    #[test]
    fn scaling_a_p_exponent_near_optimum() {
        // 1/(4·1.8431 − 6) = 1/1.3724 = 0.72865054...
        let s = scaling_constants(1.8431, 2.0, 1.0).unwrap();
        let expected = 2f64.powf(0.728_650_539_201_399);
        assert_relative_eq!(s.a_p, expected, max_relative = 1e-13);
    }

    #[test]
    fn scaling_rejects_critical_exponent() {
        assert!(scaling_constants(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn c_lambda_reduces_to_benguria_lieb_form() {
        for i in 1..100 {
            let l = i as f64 / 100.0;
            let special = 2.25 * PI * PI / (l * l * (1.0 - l));
            assert_relative_eq!(c_lambda(5.0 / 3.0, l).unwrap(), special, max_relative = 1e-12);
        }
    }

    #[test]
    fn c_lambda_at_one_half() {
        assert_relative_eq!(c_lambda(5.0 / 3.0, 0.5).unwrap(), 18.0 * PI * PI, max_relative = 1e-13);
    }

    #[test]
    fn c_lambda_rejects_endpoints() {
        assert!(c_lambda(5.0 / 3.0, 0.0).is_err());
        assert!(c_lambda(5.0 / 3.0, 1.0).is_err());
        assert!(c_lambda(2.0, 0.5).is_err());
    }

    #[test]
    fn cap_at_five_thirds_matches_hand_value() {
        // λ* = 3/4 gives c/λ = (64/3)π², raised to the power 3/4.
        let expected = 2f64.powf(4.5) * PI.powf(1.5) * 3f64.powf(-0.75);
        assert_relative_eq!(psi_cap_nonpositive_phi(5.0 / 3.0).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn cap_is_the_lambda_minimum() {
        for &p in &[1.55, 5.0 / 3.0, 1.8, 1.95] {
            let cap = psi_cap_nonpositive_phi(p).unwrap();
            let brute = (1..10_000)
                .map(|i| {
                    let l = i as f64 / 10_000.0;
                    ((ln_c_lambda(p, l).unwrap() - l.ln()) / (2.0 * p - 2.0)).exp()
                })
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(cap, brute, max_relative = 1e-6);
            assert!(brute >= cap * (1.0 - 1e-14));
        }
    }

    #[test]
    fn gamma_critical_value() {
        let g = gamma_critical();
        assert_relative_eq!(g * g, 16.0 * PI, max_relative = 1e-15);
        assert!(g > 7.089 && g < 7.090);
    }

    #[test]
    fn nam_bound_values() {
        assert_relative_eq!(nam_particle_bound(100.0).unwrap(), 152.11, max_relative = 1e-4);
        assert_relative_eq!(nam_particle_bound(1.0).unwrap(), 1.521_051_350_693_599, max_relative = 1e-12);
        assert_relative_eq!(
            nam_particle_bound(0.5).unwrap(),
            0.5 * nam_particle_bound(1.0).unwrap(),
            max_relative = 1e-15
        );
        assert!(nam_particle_bound(0.0).is_err());
    }

    #[test]
    fn critical_bound_branches() {
        assert_eq!(critical_excess_bound(8.0, 10.0).unwrap(), 0.0);
        let half = 2.0 * PI.sqrt();
        assert_relative_eq!(critical_excess_bound(half, 10.0).unwrap(), 10.0, max_relative = 1e-14);
        // (4√π − 4)/4 = 0.772453850905516...
        assert_relative_eq!(
            critical_excess_bound(4.0, 5.0).unwrap(),
            5.0 * 0.772_453_850_905_516,
            max_relative = 1e-13
        );
        assert!(critical_excess_bound(-1.0, 1.0).is_err());
    }

    #[test]
    fn critical_bound_is_continuous_at_gamma_c() {
        let gc = gamma_critical();
        for z in [0.5, 1.0, 10.0] {
            assert!(critical_excess_bound(gc - 1e-12, z).unwrap() <= 1e-11 * z);
            assert!(critical_excess_bound(gc + 1e-12, z).unwrap() <= 1e-11 * z);
        }
    }

    #[test]
    fn virial_of_zero_terms() {
        let v = virial_residuals(&EnergyTerms::default(), 5.0 / 3.0);
        assert_eq!((v.r1, v.r2, v.r3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn model_params_validation() {
        assert!(ModelParams::atom(0.9, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::atom(5.0 / 3.0, 0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(5.0 / 3.0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(ModelParams::atom(2.0, 1.0, 1.0, 1.0).is_ok());
    }
}
