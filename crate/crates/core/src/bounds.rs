//! The excess-charge bound `B(p)` and its sweep over `p`.
//!
//! For `3/2 < p < 2` and `A = γ = 1` the excess charge of an atom obeys
//! `Q ≤ max{min F, min G}`, where both branch functions depend on a
//! splitting parameter `λ ∈ (0, 1)`, an inner radius `R` and an evaluation
//! radius `r > R`:
//!
//! ```text
//! F = r·√(4π((S + c_p(λ))/λ)^{1/(p−1)} + S²)
//! G = r·√(4π(c_p(λ)/λ)^{1/(p−1)} + S²),      S = s_{p,R}(r) + π²/R²
//! ```
//!
//! Both are evaluated in log space because `a(p)` and `c_p(λ)` leave the
//! double range near the ends of the window.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::model::{ln_c_lambda, require_open_window, scaling_constants};
use crate::optimize::{nelder_mead, NelderMead};
use crate::sommerfeld::{ln_s_p_r_unchecked, make_sommerfeld_params, SommerfeldParams};

/// Which branch function attained the maximum in `B(p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    F,
    G,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::F => "F",
            Branch::G => "G",
        })
    }
}

/// How the evaluation radius `r` is treated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RadiusMode {
    /// `r` is a third minimization variable.
    Minimize,
    /// `r` is held at the given value; only `λ` and `R` are optimized.
    Fixed(f64),
}

/// Search box and optimizer settings for [`compute_b`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// Coarse grid points per axis.
    pub grid_n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Smallest `R` on the coarse grid (reduced to `r/10` for tiny `r`).
    pub big_r_min: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub radius: RadiusMode,
    /// Simplex diameter threshold in the unconstrained coordinates.
    pub x_tol: f64,
    /// Relative spread threshold on `ln F`.
    pub f_tol: f64,
    pub max_evaluations: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            grid_n: 40,
            lambda_min: 0.02,
            lambda_max: 0.98,
            big_r_min: 1e-2,
            r_min: 1e-2,
            r_max: 1e3,
            radius: RadiusMode::Minimize,
            x_tol: 1e-9,
            f_tol: 1e-14,
            max_evaluations: 20_000,
        }
    }
}

/// The minimizer of one branch function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchOptimum {
    /// Minimum value.
    pub value: f64,
    pub lambda: f64,
    pub big_r: f64,
    pub r: f64,
    /// Best value on the coarse grid, before refinement.
    pub grid_value: f64,
    /// Function evaluations spent in refinement.
    pub evaluations: usize,
    pub converged: bool,
}

/// Outcome of [`compute_b`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub p: f64,
    /// `B(p) = max(min F, min G)`.
    pub b_value: f64,
    /// The branch whose minimum equals `B(p)`.
    pub branch: Branch,
    pub f: BranchOptimum,
    pub g: BranchOptimum,
    /// Options used to produce the result.
    pub options: BoundOptions,
}

impl BoundResult {
    /// The optimum of the branch that attained the maximum.
    pub fn attained(&self) -> &BranchOptimum {
        match self.branch {
            Branch::F => &self.f,
            Branch::G => &self.g,
        }
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// `ln F` or `ln G` without domain checks.
fn ln_branch(sp: &SommerfeldParams, branch: Branch, lambda: f64, big_r: f64, r: f64) -> f64 {
    let q = 1.0 / (sp.p - 1.0);
    let ln_c = match ln_c_lambda(sp.p, lambda) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    let ln_s = logaddexp(ln_s_p_r_unchecked(sp, big_r, r), 2.0 * PI.ln() - 2.0 * big_r.ln());
    let ln_inner = match branch {
        Branch::F => logaddexp(ln_s, ln_c),
        Branch::G => ln_c,
    } - lambda.ln();
    r.ln() + 0.5 * logaddexp((4.0 * PI).ln() + q * ln_inner, 2.0 * ln_s)
}

fn check_branch_args(p: f64, lambda: f64, big_r: f64, r: f64) -> Result<()> {
    require_open_window(p, "the branch functions")?;
    ensure(lambda > 0.0 && lambda < 1.0, || format!("lambda = {lambda} must lie in (0, 1)"))?;
    ensure(big_r > 0.0 && big_r < r && r.is_finite(), || {
        format!("radii must satisfy 0 < R < r, got R = {big_r}, r = {r}")
    })
}

/// The branch function `F(λ, R, r)`.
pub fn branch_f(p: f64, lambda: f64, big_r: f64, r: f64) -> Result<f64> {
    check_branch_args(p, lambda, big_r, r)?;
    let sp = make_sommerfeld_params(p)?;
    Ok(ln_branch(&sp, Branch::F, lambda, big_r, r).exp())
}

/// The branch function `G(λ, R, r)`.
pub fn branch_g(p: f64, lambda: f64, big_r: f64, r: f64) -> Result<f64> {
    check_branch_args(p, lambda, big_r, r)?;
    let sp = make_sommerfeld_params(p)?;
    Ok(ln_branch(&sp, Branch::G, lambda, big_r, r).exp())
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

/// Maps unconstrained coordinates to `(λ, R, r)`.
fn decode(x: &[f64], radius: RadiusMode) -> (f64, f64, f64) {
    let lambda = logistic(x[0]);
    let r = match radius {
        RadiusMode::Minimize => x[2].exp(),
        RadiusMode::Fixed(r) => r,
    };
    (lambda, logistic(x[1]) * r, r)
}

fn encode(lambda: f64, big_r: f64, r: f64, radius: RadiusMode) -> Vec<f64> {
    let mut x = vec![logit(lambda), logit(big_r / r)];
    if radius == RadiusMode::Minimize {
        x.push(r.ln());
    }
    x
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// Coarse grid points for `R` below `r`, all strictly inside `(0, r)`.
fn big_r_axis(r: f64, opts: &BoundOptions) -> Vec<f64> {
    let lo = opts.big_r_min.min(r / 10.0);
    let n = opts.grid_n;
    (1..=n).map(|j| lo * (r / lo).powf(j as f64 / (n + 1) as f64)).collect()
}

fn validate_options(opts: &BoundOptions) -> Result<()> {
    ensure(opts.grid_n >= 2, || format!("grid_n = {} must be at least 2", opts.grid_n))?;
    ensure(opts.lambda_min > 0.0 && opts.lambda_min < opts.lambda_max && opts.lambda_max < 1.0, || {
        format!("lambda range ({}, {}) must lie inside (0, 1)", opts.lambda_min, opts.lambda_max)
    })?;
    ensure(opts.big_r_min > 0.0, || format!("R_min = {} must be positive", opts.big_r_min))?;
    match opts.radius {
        RadiusMode::Minimize => ensure(opts.r_min > 0.0 && opts.r_min < opts.r_max, || {
            format!("r range ({}, {}) must be positive and increasing", opts.r_min, opts.r_max)
        }),
        RadiusMode::Fixed(r) => {
            ensure(r > 0.0 && r.is_finite(), || format!("fixed r = {r} must be positive"))
        }
    }
}

fn minimize_branch(sp: &SommerfeldParams, branch: Branch, opts: &BoundOptions) -> Result<BranchOptimum> {
    let lambdas = linspace(opts.lambda_min, opts.lambda_max, opts.grid_n);
    let radii = match opts.radius {
        RadiusMode::Minimize => logspace(opts.r_min, opts.r_max, opts.grid_n),
        RadiusMode::Fixed(r) => vec![r],
    };
    let mut best = (f64::INFINITY, 0.5, 0.5, 1.0);
    for &r in &radii {
        for big_r in big_r_axis(r, opts) {
            for &lambda in &lambdas {
                let v = ln_branch(sp, branch, lambda, big_r, r);
                if v < best.0 {
                    best = (v, lambda, big_r, r);
                }
            }
        }
    }
    let (grid_ln, l0, br0, r0) = best;
    ensure(grid_ln.is_finite(), || format!("branch {branch} is not finite anywhere on the grid"))?;

    let radius = opts.radius;
    let objective = |x: &[f64]| {
        let (lambda, big_r, r) = decode(x, radius);
        if !(lambda > 0.0 && lambda < 1.0 && big_r > 0.0 && big_r < r && r.is_finite()) {
            return f64::INFINITY;
        }
        ln_branch(sp, branch, lambda, big_r, r)
    };
    let m = nelder_mead(
        &objective,
        &encode(l0, br0, r0, radius),
        NelderMead {
            step: 0.2,
            x_tol: opts.x_tol,
            f_tol: opts.f_tol,
            max_evaluations: opts.max_evaluations,
        },
    );
    let (lambda, big_r, r) = decode(&m.x, radius);
    let grid_value = grid_ln.exp();
    let value = m.value.exp();
    if !m.converged || !(m.value <= grid_ln) {
        return Err(Error::OptimizerFailure(format!(
            "branch {branch} at p = {}: refinement {} from grid value {grid_value:.10e} \
             ended at {value:.10e} after {} evaluations",
            sp.p,
            if m.converged { "did not improve" } else { "did not converge" },
            m.evaluations
        )));
    }
    Ok(BranchOptimum {
        value,
        lambda,
        big_r,
        r,
        grid_value,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

/// Computes `B(p)` by a coarse grid search followed by simplex refinement
/// of each branch.
pub fn compute_b(p: f64, opts: &BoundOptions) -> Result<BoundResult> {
    require_open_window(p, "B(p)")?;
    validate_options(opts)?;
    let sp = make_sommerfeld_params(p)?;
    let f = minimize_branch(&sp, Branch::F, opts)?;
    let g = minimize_branch(&sp, Branch::G, opts)?;
    let (b_value, branch) = if f.value >= g.value { (f.value, Branch::F) } else { (g.value, Branch::G) };
    Ok(BoundResult { p, b_value, branch, f, g, options: *opts })
}

/// Evaluates [`compute_b`] at every `p`, in parallel, preserving order.
pub fn bound_curve(p_values: &[f64], opts: &BoundOptions) -> Result<Vec<BoundResult>> {
    p_values.par_iter().map(|&p| compute_b(p, opts)).collect()
}

/// Relative gradient of `ln` of a branch function at an optimum, taken in
/// the coordinates `(logit λ, logit(R/r), ln r)` by central differences.
///
/// The largest component is returned; it is small at an interior minimum.
pub fn branch_gradient(p: f64, branch: Branch, opt: &BranchOptimum, radius: RadiusMode) -> Result<f64> {
    require_open_window(p, "the branch gradient")?;
    let sp = make_sommerfeld_params(p)?;
    let x0 = encode(opt.lambda, opt.big_r, opt.r, radius);
    let f = |x: &[f64]| {
        let (lambda, big_r, r) = decode(x, radius);
        ln_branch(&sp, branch, lambda, big_r, r)
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..x0.len() {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[i] += h;
        xm[i] -= h;
        worst = worst.max(((f(&xp) - f(&xm)) / (2.0 * h)).abs());
    }
    Ok(worst)
}

/// Restores `A` and `γ`: `B·A^{(3p−4)/(4p−6)}·γ^{−1/(4p−6)}`.
pub fn restore_units(b: f64, p: f64, big_a: f64, gamma: f64) -> Result<f64> {
    Ok(b * scaling_constants(p, big_a, gamma)?.c_p)
}

/// The bound for a molecule with `K` nuclei, `B·K`.
pub fn molecular_bound(b: f64, k: u32) -> Result<f64> {
    ensure(k >= 1, || format!("K = {k} must be at least 1"))?;
    Ok(b * f64::from(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn branch_values_at_a_hand_point() {
        let pi2 = PI * PI;
        let s = 25.0 / pi2 + pi2;
        let f = 2.0 * (4.0 * PI * ((s + 18.0 * pi2) / 0.5).powf(1.5) + s * s).sqrt();
        let g = 2.0 * (4.0 * PI * (18.0 * pi2 / 0.5).powf(1.5) + s * s).sqrt();
        assert_relative_eq!(branch_f(5.0 / 3.0, 0.5, 1.0, 2.0).unwrap(), f, max_relative = 1e-12);
        assert_relative_eq!(branch_g(5.0 / 3.0, 0.5, 1.0, 2.0).unwrap(), g, max_relative = 1e-12);
    }

    #[test]
    fn branch_arguments_are_validated() {
        assert!(branch_f(1.4, 0.5, 1.0, 2.0).is_err());
        assert!(branch_f(5.0 / 3.0, 1.0, 1.0, 2.0).is_err());
        assert!(branch_g(5.0 / 3.0, 0.5, 2.0, 2.0).is_err());
    }

    #[test]
    fn units_and_molecules() {
        assert_relative_eq!(restore_units(100.0, 5.0 / 3.0, 1.0, 8.0).unwrap(), 100.0 / (16.0 * 2f64.sqrt()), max_relative = 1e-12);
        assert_eq!(restore_units(42.0, 1.7, 1.0, 1.0).unwrap(), 42.0);
        assert!(restore_units(1.0, 1.5, 1.0, 1.0).is_err());
        assert_relative_eq!(molecular_bound(101.14, 2).unwrap(), 202.28, max_relative = 1e-14);
        assert!(molecular_bound(1.0, 0).is_err());
    }

    #[test]
    fn b_at_five_thirds_is_interior_and_deterministic() {
        let opts = BoundOptions::default();
        let a = compute_b(5.0 / 3.0, &opts).unwrap();
        let b = compute_b(5.0 / 3.0, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.b_value, a.f.value.max(a.g.value));
        for (branch, o) in [(Branch::F, &a.f), (Branch::G, &a.g)] {
            assert!(o.lambda > 0.0 && o.lambda < 1.0 && o.big_r > 0.0 && o.big_r < o.r);
            assert!(o.value <= o.grid_value);
            assert!(branch_gradient(a.p, branch, o, opts.radius).unwrap() < 1e-6);
        }
    }
}
