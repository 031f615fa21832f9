//! Sommerfeld-type solutions of `Δφ = 4πφ^{1/(p−1)}` at `γ = 1`.
//!
//! All profiles are radial power forms, so their Laplacians
//! `f″ + 2f′/r` are evaluated analytically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::model::require_open_window;

/// Constants of the Sommerfeld family for one exponent `p ∈ (3/2, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SommerfeldParams {
    pub p: f64,
    /// Decay exponent `σ = 2(p−1)/(2−p)`.
    pub sigma: f64,
    /// Remainder exponent `ζ`.
    pub zeta: f64,
    /// Coefficient `b(p)` of the exact solution `b r^{−σ}`.
    pub b_coef: f64,
    /// Coefficient `a(p)` of the shifted supersolution `a (r−R)^{−σ}`.
    pub a_coef: f64,
    /// `ln b(p)`; finite even where `b(p)` overflows near `p = 2`.
    pub ln_b_coef: f64,
    /// `ln a(p)`.
    pub ln_a_coef: f64,
}

/// Builds the Sommerfeld constants for `p ∈ (3/2, 2)`.
pub fn make_sommerfeld_params(p: f64) -> Result<SommerfeldParams> {
    require_open_window(p, "the Sommerfeld family")?;
    let e = (p - 1.0) / (2.0 - p);
    let denom = 2.0 * PI * (2.0 - p) * (2.0 - p);
    let ln_b_coef = e * ((p - 1.0) * (3.0 * p - 4.0) / denom).ln();
    let ln_a_coef = e * ((p - 1.0) * p / denom).ln();
    // Positive root of ζ² + Bζ − C = 0 in the cancellation-free form
    // 2C/(B + √(B² + 4C)).
    let big_b = (5.0 * p - 6.0) / (2.0 - p);
    let big_c = 2.0 * (3.0 * p - 4.0) / (2.0 - p);
    let zeta = 2.0 * big_c / (big_b + (big_b * big_b + 4.0 * big_c).sqrt());
    Ok(SommerfeldParams {
        p,
        sigma: 2.0 * e,
        zeta,
        b_coef: ln_b_coef.exp(),
        a_coef: ln_a_coef.exp(),
        ln_b_coef,
        ln_a_coef,
    })
}

impl SommerfeldParams {
    /// Exponent `1/(p−1)` of the nonlinearity.
    pub fn q(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }

    /// Right-hand side `4π f^{1/(p−1)}` of the differential TF equation.
    pub fn tf_rhs(&self, f: f64) -> f64 {
        4.0 * PI * f.max(0.0).powf(self.q())
    }

    /// Residual of the `ζ` quadratic `ζ² + ((5p−6)/(2−p))ζ − 2(3p−4)/(2−p)`,
    /// relative to the sum of the magnitudes of its three terms.
    pub fn zeta_identity_residual(&self) -> f64 {
        let p = self.p;
        let z = self.zeta;
        let terms = [z * z, (5.0 * p - 6.0) / (2.0 - p) * z, -2.0 * (3.0 * p - 4.0) / (2.0 - p)];
        terms.iter().sum::<f64>() / terms.iter().map(|t| t.abs()).sum::<f64>()
    }
}

fn require_radius(r: f64) -> Result<()> {
    ensure(r > 0.0 && r.is_finite(), || format!("radius r = {r} must be positive"))
}

/// The Sommerfeld solution `s_p(r) = b(p) r^{−σ}`.
pub fn s_p(params: &SommerfeldParams, r: f64) -> Result<f64> {
    require_radius(r)?;
    Ok((params.ln_b_coef - params.sigma * r.ln()).exp())
}

/// Analytic Laplacian of `s_p`, `b σ(σ−1) r^{−σ−2}`.
pub fn laplacian_s_p(params: &SommerfeldParams, r: f64) -> Result<f64> {
    require_radius(r)?;
    let s = params.sigma;
    Ok(params.b_coef * s * (s - 1.0) * r.powf(-s - 2.0))
}

/// The shifted supersolution `s_{p,R}(r) = a(p)(r−R)^{−σ}` for `r > R`.
pub fn s_p_r(params: &SommerfeldParams, big_r: f64, r: f64) -> Result<f64> {
    require_shifted(big_r, r)?;
    Ok(ln_s_p_r_unchecked(params, big_r, r).exp())
}

/// `ln s_{p,R}(r)` without domain checks.
pub(crate) fn ln_s_p_r_unchecked(params: &SommerfeldParams, big_r: f64, r: f64) -> f64 {
    params.ln_a_coef - params.sigma * (r - big_r).ln()
}

/// Analytic Laplacian of `s_{p,R}`.
pub fn laplacian_s_p_r(params: &SommerfeldParams, big_r: f64, r: f64) -> Result<f64> {
    require_shifted(big_r, r)?;
    let s = params.sigma;
    let x = r - big_r;
    Ok(params.a_coef * s * ((s + 1.0) * x.powf(-s - 2.0) - 2.0 * x.powf(-s - 1.0) / r))
}

fn require_shifted(big_r: f64, r: f64) -> Result<()> {
    ensure(big_r > 0.0 && r > big_r && r.is_finite(), || {
        format!("need r > R > 0, got R = {big_r}, r = {r}")
    })
}

fn remainder_base(params: &SommerfeldParams, k: f64, r: f64) -> Result<f64> {
    require_radius(r)?;
    let g = 1.0 + k * r.powf(-params.zeta);
    ensure(g > 0.0, || format!("1 + k r^(-zeta) = {g} must be positive (k = {k}, r = {r})"))?;
    Ok(g)
}

/// The remainder-corrected supersolution `(1 + k r^{−ζ}) s_p(r)`.
pub fn omega_plus(params: &SommerfeldParams, k: f64, r: f64) -> Result<f64> {
    let g = remainder_base(params, k, r)?;
    Ok(g * s_p(params, r)?)
}

/// Analytic Laplacian of [`omega_plus`].
pub fn laplacian_omega_plus(params: &SommerfeldParams, k: f64, r: f64) -> Result<f64> {
    remainder_base(params, k, r)?;
    let m1 = params.sigma;
    let m2 = params.sigma + params.zeta;
    let b = params.b_coef;
    Ok(b * m1 * (m1 - 1.0) * r.powf(-m1 - 2.0) + b * k * m2 * (m2 - 1.0) * r.powf(-m2 - 2.0))
}

/// Exponent `(p−1)/(2−p)` of the subsolution correction.
fn minus_exponent(params: &SommerfeldParams) -> f64 {
    (params.p - 1.0) / (2.0 - params.p)
}

/// The remainder-corrected subsolution `(1 + k r^{−ζ})^{−(p−1)/(2−p)} s_p(r)`, `k ≥ 0`.
pub fn omega_minus(params: &SommerfeldParams, k: f64, r: f64) -> Result<f64> {
    ensure(k >= 0.0, || format!("the subsolution needs k >= 0, got k = {k}"))?;
    omega_minus_any(params, k, r)
}

/// [`omega_minus`] without the sign restriction on `k`.
pub(crate) fn omega_minus_any(params: &SommerfeldParams, k: f64, r: f64) -> Result<f64> {
    let g = remainder_base(params, k, r)?;
    Ok(g.powf(-minus_exponent(params)) * s_p(params, r)?)
}

/// Analytic Laplacian of [`omega_minus`].
pub fn laplacian_omega_minus(params: &SommerfeldParams, k: f64, r: f64) -> Result<f64> {
    ensure(k >= 0.0, || format!("the subsolution needs k >= 0, got k = {k}"))?;
    let g = remainder_base(params, k, r)?;
    let e = minus_exponent(params);
    let z = params.zeta;
    let g1 = -k * z * r.powf(-z - 1.0);
    let g2 = k * z * (z + 1.0) * r.powf(-z - 2.0);
    let w = g.powf(-e);
    let w1 = -e * g.powf(-e - 1.0) * g1;
    let w2 = e * (e + 1.0) * g.powf(-e - 2.0) * g1 * g1 - e * g.powf(-e - 1.0) * g2;
    let s = params.b_coef * r.powf(-params.sigma);
    let s1 = -params.sigma * s / r;
    let lap_s = laplacian_s_p(params, r)?;
    Ok(w * lap_s + 2.0 * w1 * s1 + s * (w2 + 2.0 * w1 / r))
}

/// Pointwise minimum `min(s_{p,R}(r), ω⁺_k(r))` for `r > R`.
pub fn sigma_min_bound(params: &SommerfeldParams, big_r: f64, k: f64, r: f64) -> Result<f64> {
    Ok(s_p_r(params, big_r, r)?.min(omega_plus(params, k, r)?))
}

/// All radii in `(R, r_max]` where `s_{p,R} = ω⁺_k`.
///
/// The difference is sampled on a fine logarithmic mesh in `r − R` and every
/// sign change is refined by bisection. The result may be empty: for small
/// `k` the shifted supersolution stays above `ω⁺_k` everywhere.
pub fn crossing_radii(params: &SommerfeldParams, big_r: f64, k: f64, r_max: f64) -> Result<Vec<f64>> {
    require_shifted(big_r, r_max)?;
    let diff = |r: f64| -> Result<f64> {
        // Compare in log space; both sides are positive.
        Ok(s_p_r(params, big_r, r)?.ln() - omega_plus(params, k, r)?.ln())
    };
    let samples = 4000;
    let lo = (big_r * 1e-9).ln();
    let hi = (r_max - big_r).ln();
    let at = |i: usize| big_r + (lo + (hi - lo) * i as f64 / samples as f64).exp();
    let mut roots = Vec::new();
    let mut prev_r = at(0);
    let mut prev = diff(prev_r)?;
    for i in 1..=samples {
        let r = at(i);
        let d = diff(r)?;
        if prev == 0.0 {
            roots.push(prev_r);
        } else if prev.signum() != d.signum() && d != 0.0 {
            let (mut a, mut b) = (prev_r, r);
            let fa = prev;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = diff(m)?;
                if fm.signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_r = r;
        prev = d;
    }
    Ok(roots)
}

/// Remainder constant `k` with `ω⁺_k(R) = value`.
pub fn match_plus(params: &SommerfeldParams, big_r: f64, value: f64) -> Result<f64> {
    let s = s_p(params, big_r)?;
    if !(value > 0.0) {
        return Err(Error::BoundaryMatchFailure(format!(
            "potential {value} at R = {big_r} is not positive"
        )));
    }
    Ok((value / s - 1.0) * big_r.powf(params.zeta))
}

/// Remainder constant `k ≥ 0` with `ω⁻_k(R) = value`; needs `0 < value ≤ s_p(R)`.
pub fn match_minus(params: &SommerfeldParams, big_r: f64, value: f64) -> Result<f64> {
    let s = s_p(params, big_r)?;
    if !(value > 0.0 && value <= s) {
        return Err(Error::BoundaryMatchFailure(format!(
            "potential {value} at R = {big_r} must lie in (0, s_p(R) = {s}]"
        )));
    }
    let e = minus_exponent(params);
    Ok(((s / value).powf(1.0 / e) - 1.0) * big_r.powf(params.zeta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn five_thirds() -> SommerfeldParams {
        make_sommerfeld_params(5.0 / 3.0).unwrap()
    }

    #[test]
    fn classical_constants() {
        let s = five_thirds();
        assert_relative_eq!(s.sigma, 4.0, max_relative = 1e-14);
        assert_relative_eq!(s.b_coef, 9.0 / (PI * PI), max_relative = 1e-13);
        assert_relative_eq!(s.a_coef, 25.0 / (PI * PI), max_relative = 1e-13);
        assert_relative_eq!(s.zeta, (73f64.sqrt() - 7.0) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(s.zeta, 0.772_001_872_658_765, max_relative = 1e-12);
    }

    #[test]
    fn rejects_outside_window() {
        assert!(make_sommerfeld_params(1.5).is_err());
        assert!(make_sommerfeld_params(2.0).is_err());
    }

    #[test]
    fn s_p_values() {
        let s = five_thirds();
        assert_relative_eq!(s_p(&s, 1.0).unwrap(), 9.0 / (PI * PI), max_relative = 1e-13);
        assert_relative_eq!(s_p(&s, 2.0).unwrap(), 9.0 / (PI * PI) / 16.0, max_relative = 1e-13);
        let s18 = make_sommerfeld_params(1.8).unwrap();
        let expected = (1.12 / (0.08 * PI)).powi(4);
        assert_relative_eq!(s_p(&s18, 1.0).unwrap(), expected, max_relative = 1e-12);
        assert!(s_p(&s, 0.0).is_err());
    }

    #[test]
    fn shifted_values() {
        let s = five_thirds();
        assert_relative_eq!(s_p_r(&s, 1.0, 2.0).unwrap(), 25.0 / (PI * PI), max_relative = 1e-13);
        let s18 = make_sommerfeld_params(1.8).unwrap();
        assert_relative_eq!(s_p_r(&s18, 0.5, 1.5).unwrap(), s18.a_coef, max_relative = 1e-14);
        assert!(s_p_r(&s, 1e-9, 3.0).unwrap() > s_p(&s, 3.0).unwrap());
        assert!(s_p_r(&s, 2.0, 2.0).is_err());
    }

    #[test]
    fn omega_identities() {
        let s = five_thirds();
        assert_eq!(omega_plus(&s, 0.0, 3.0).unwrap(), s_p(&s, 3.0).unwrap());
        assert_eq!(omega_minus(&s, 0.0, 3.0).unwrap(), s_p(&s, 3.0).unwrap());
        assert_relative_eq!(omega_plus(&s, 1.0, 1.0).unwrap(), 18.0 / (PI * PI), max_relative = 1e-13);
        assert!(omega_minus(&s, 0.5, 3.0).unwrap() < s_p(&s, 3.0).unwrap());
        assert!(omega_minus(&s, -0.5, 3.0).is_err());
    }

    #[test]
    fn small_k_has_no_crossing() {
        // s_{p,R}/ω⁺_1 ≥ (25/9)/2 > 1 on (1, ∞).
        let s = five_thirds();
        assert!(crossing_radii(&s, 1.0, 1.0, 1e6).unwrap().is_empty());
    }

    #[test]
    fn large_k_crossings_bracket_the_omega_region() {
        let s = five_thirds();
        let roots = crossing_radii(&s, 1.0, 100.0, 1e6).unwrap();
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert_relative_eq!(s_p_r(&s, 1.0, r).unwrap(), omega_plus(&s, 100.0, r).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn boundary_matching_round_trips() {
        let s = five_thirds();
        let v = 0.5 * s_p(&s, 2.0).unwrap();
        let kp = match_plus(&s, 2.0, v).unwrap();
        assert_relative_eq!(omega_plus(&s, kp, 2.0).unwrap(), v, max_relative = 1e-13);
        let km = match_minus(&s, 2.0, v).unwrap();
        assert_relative_eq!(omega_minus(&s, km, 2.0).unwrap(), v, max_relative = 1e-13);
        assert!(match_minus(&s, 2.0, 2.0 * s_p(&s, 2.0).unwrap()).is_err());
    }
}
