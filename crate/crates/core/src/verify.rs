//! Pass/fail checks of the analytic inequalities on solver output.
//!
//! Every check reduces to a worst-case violation, the node (or parameter)
//! where it occurs, and the tolerance it is compared against. Nodewise
//! inequalities `lhs ≤ rhs` are measured as
//! `max(0, lhs − rhs − rel·max(|lhs|, |rhs|))` against an absolute
//! tolerance, so that both relative and absolute slack are honoured.
//! Checks of discrete second differences also allow an `h²` term for the
//! discretization error of the grid.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{restore_units, BoundResult};
use crate::error::{Error, Result};
use crate::model::{
    c_lambda, critical_excess_bound, nam_particle_bound, psi_cap_nonpositive_phi, scaling_constants,
    virial_residuals,
};
use crate::radial::{density_integral, hartree_values, RadialProfile};
use crate::solvers::{TfSolution, TfwSolution};
use crate::sommerfeld::{
    make_sommerfeld_params, match_minus, match_plus, omega_minus, omega_plus, s_p, s_p_r,
};

/// Tolerances and sample sets for the checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Relative bound on the virial residuals.
    pub virial_tol: f64,
    /// Required decay of `rψ` over the outer decade, relative to its peak.
    pub decay_tol: f64,
    /// Required Euler residual for a solution to count as converged.
    pub euler_tol: f64,
    /// Splitting parameters for the `λ`-inequality.
    pub lambdas: Vec<f64>,
    /// Inner radii for the shifted-supersolution bound.
    pub radii: Vec<f64>,
    /// Matching radius for the two-sided Sommerfeld bound.
    pub tf_radius: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            virial_tol: 1e-3,
            decay_tol: 1e-6,
            euler_tol: 1e-6,
            lambdas: vec![0.25, 0.5, 0.75],
            radii: vec![0.5, 1.0, 2.0],
            tf_radius: 1.0,
        }
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// Worst violation, nonnegative.
    pub violation: f64,
    /// Radius or parameter value of the worst violation.
    pub location: Option<f64>,
    pub tolerance: f64,
    /// Which sub-inequality the worst violation belongs to, or why the
    /// check does not apply.
    pub detail: String,
}

/// Running maximum of violations with their locations.
struct Worst {
    violation: f64,
    location: Option<f64>,
    detail: String,
}

impl Worst {
    fn new() -> Self {
        Self { violation: 0.0, location: None, detail: String::new() }
    }

    fn offer(&mut self, violation: f64, location: f64, detail: impl FnOnce() -> String) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.violation {
            self.violation = v;
            self.location = Some(location);
            self.detail = detail();
        }
    }

    fn finish(self, name: &str, tolerance: f64) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            pass: self.violation <= tolerance,
            violation: self.violation,
            location: self.location,
            tolerance,
            detail: self.detail,
        }
    }
}

fn not_applicable(name: &str, tolerance: f64, why: &str) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        pass: true,
        violation: 0.0,
        location: None,
        tolerance,
        detail: format!("not applicable: {why}"),
    }
}

/// Excess of `lhs` over `rhs` beyond the relative slack.
fn excess(lhs: f64, rhs: f64, opts: &CheckOptions) -> f64 {
    (lhs - rhs - opts.rel_tol * lhs.abs().max(rhs.abs())).max(0.0)
}

fn in_open_window(p: f64) -> bool {
    p > 1.5 && p < 2.0
}

/// `P` is subharmonic and `rP(r)` is convex, non-increasing and at least `Q`.
///
/// All four sub-checks are made dimensionless: the Laplacian and the second
/// difference by `P/r²` and `rP/r²`, the monotonicity by `max rP`, the
/// lower bound by `Z`. The tolerance is `rel_tol + h²`.
pub fn check_subharmonic_p(sol: &TfwSolution, opts: &CheckOptions) -> CheckReport {
    let name = "subharmonic_P";
    let h = sol.grid().h();
    let tol = opts.rel_tol + h * h;
    let p = sol.p_profile();
    let r = p.nodes();
    let pv = p.values();
    let n = r.len();
    let u: Vec<f64> = r.iter().zip(pv).map(|(r, p)| r * p).collect();
    let u_max = u.iter().cloned().fold(0.0, f64::max);
    let mut w = Worst::new();
    for i in 1..n - 1 {
        let ftt = (pv[i + 1] - 2.0 * pv[i] + pv[i - 1]) / (h * h);
        let ft = (pv[i + 1] - pv[i - 1]) / (2.0 * h);
        if pv[i] > 0.0 {
            w.offer(-(ftt + ft) / pv[i], r[i], || "negative discrete Laplacian of P".into());
        }
        let left = (u[i] - u[i - 1]) / (r[i] - r[i - 1]);
        let right = (u[i + 1] - u[i]) / (r[i + 1] - r[i]);
        let curv = 2.0 * (right - left) / (r[i + 1] - r[i - 1]);
        if u[i] > 0.0 {
            w.offer(-curv * r[i] * r[i] / u[i], r[i], || "concavity of rP".into());
        }
    }
    if u_max > 0.0 {
        for i in 0..n - 1 {
            w.offer((u[i + 1] - u[i]) / u_max, r[i + 1], || "increase of rP".into());
        }
    }
    for i in 0..n {
        w.offer((sol.q - u[i]) / sol.params.z, r[i], || "rP below Q".into());
    }
    w.finish(name, tol)
}

/// `ψ^{2p−2} ≤ Z/(γr)` at every node.
pub fn check_lemma_g1(sol: &TfwSolution, opts: &CheckOptions) -> CheckReport {
    let mut w = Worst::new();
    let e = 2.0 * sol.params.p - 2.0;
    for (&r, &s) in sol.psi.nodes().iter().zip(sol.psi.values()) {
        w.offer(excess(s.powf(e), sol.params.z / (sol.params.gamma * r), opts), r, || {
            "psi^(2p-2) above Z/(gamma r)".into()
        });
    }
    w.finish("lemma_g1", opts.abs_tol)
}

/// `λγψ^{2p−2} ≤ φ + c_p(λ)A^{(p−1)/(2p−3)}γ^{−1/(2p−3)}` for each `λ`, and
/// `ψ ≤ a_p·cap` wherever `φ ≤ 0`.
pub fn check_t1(sol: &TfwSolution, lambdas: &[f64], opts: &CheckOptions) -> CheckReport {
    let name = "t1";
    let prm = &sol.params;
    if !in_open_window(prm.p) {
        return not_applicable(name, opts.abs_tol, "needs 3/2 < p < 2");
    }
    let unit = ((prm.p - 1.0) * prm.big_a.ln() - prm.gamma.ln()) / (2.0 * prm.p - 3.0);
    let e = 2.0 * prm.p - 2.0;
    let r = sol.psi.nodes();
    let s = sol.psi.values();
    let f = sol.phi.values();
    let mut w = Worst::new();
    for &lambda in lambdas {
        let c = match c_lambda(prm.p, lambda) {
            Ok(c) => c * unit.exp(),
            Err(e) => {
                w.offer(f64::INFINITY, lambda, || e.to_string());
                continue;
            }
        };
        for i in 0..r.len() {
            w.offer(excess(lambda * prm.gamma * s[i].powf(e), f[i] + c, opts), r[i], || {
                format!("lambda = {lambda}")
            });
        }
    }
    let cap = match (psi_cap_nonpositive_phi(prm.p), scaling_constants(prm.p, prm.big_a, prm.gamma)) {
        (Ok(cap), Ok(sc)) => cap * sc.a_p,
        _ => f64::INFINITY,
    };
    for i in 0..r.len() {
        if f[i] <= 0.0 {
            w.offer(excess(s[i], cap, opts), r[i], || "psi above the cap where phi <= 0".into());
        }
    }
    w.finish(name, opts.abs_tol)
}

/// `φ(r) ≤ Aπ²/R² + A b_p² s_{p, b_p R}(b_p r)` at every node `r > R`, for
/// each `R`.
pub fn check_z0(sol: &TfwSolution, radii: &[f64], opts: &CheckOptions) -> CheckReport {
    let name = "z0";
    let prm = &sol.params;
    if !in_open_window(prm.p) {
        return not_applicable(name, opts.abs_tol, "needs 3/2 < p < 2");
    }
    let (sp, sc) = match (make_sommerfeld_params(prm.p), scaling_constants(prm.p, prm.big_a, prm.gamma)) {
        (Ok(sp), Ok(sc)) => (sp, sc),
        _ => return not_applicable(name, opts.abs_tol, "parameters out of range"),
    };
    let b = sc.b_p;
    let mut w = Worst::new();
    for &big_r in radii {
        for (&r, &f) in sol.phi.nodes().iter().zip(sol.phi.values()) {
            if r <= big_r {
                continue;
            }
            let bound = match s_p_r(&sp, b * big_r, b * r) {
                Ok(s) => prm.big_a * (PI * PI / (big_r * big_r) + b * b * s),
                Err(_) => continue,
            };
            w.offer(excess(f, bound, opts), r, || format!("R = {big_r}"));
        }
    }
    w.finish(name, opts.abs_tol)
}

/// Remainder constants fixed by matching `ω⁺` and `ω⁻` to `φ(R)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedConstants {
    pub big_r: f64,
    pub phi_at_r: f64,
    pub k_plus: f64,
    pub k_minus: f64,
}

/// Strength of the Sommerfeld family for coupling `γ`: `φ = γ^{1/(2−p)}S`
/// solves `Δφ = 4π(φ/γ)^{1/(p−1)}` whenever `S` solves it at `γ = 1`.
fn gamma_strength(p: f64, gamma: f64) -> f64 {
    gamma.powf(1.0 / (2.0 - p))
}

/// Matches the remainder constants at the first node at or beyond `R`.
pub fn match_constants(sol: &TfSolution, big_r: f64) -> Result<MatchedConstants> {
    let sp = make_sommerfeld_params(sol.params.p)?;
    let r = sol.phi.nodes();
    let i = r.partition_point(|&x| x < big_r);
    if i >= r.len() {
        return Err(Error::BoundaryMatchFailure(format!("R = {big_r} lies beyond the grid")));
    }
    let kappa = gamma_strength(sol.params.p, sol.params.gamma);
    let value = sol.phi.values()[i] / kappa;
    Ok(MatchedConstants {
        big_r: r[i],
        phi_at_r: value * kappa,
        k_plus: match_plus(&sp, r[i], value)?,
        k_minus: match_minus(&sp, r[i], value)?,
    })
}

/// `φ ≤ S_p` everywhere; with constants matched at `R`,
/// `ω⁻ ≤ φ ≤ ω⁺` and `φ ≤ min(s_{p,R}, ω⁺)` beyond `R`.
pub fn check_tf_sommerfeld(sol: &TfSolution, big_r: f64, opts: &CheckOptions) -> Result<CheckReport> {
    let name = "tf_sommerfeld";
    let p = sol.params.p;
    let sp = make_sommerfeld_params(p)?;
    let kappa = gamma_strength(p, sol.params.gamma);
    let m = match_constants(sol, big_r)?;
    let mut w = Worst::new();
    for (&r, &f) in sol.phi.nodes().iter().zip(sol.phi.values()) {
        w.offer(excess(f, kappa * s_p(&sp, r)?, opts), r, || "phi above S_p".into());
        if r <= m.big_r {
            continue;
        }
        let upper = kappa * omega_plus(&sp, m.k_plus, r)?;
        let lower = kappa * omega_minus(&sp, m.k_minus, r)?;
        let shifted = kappa * s_p_r(&sp, m.big_r, r)?;
        w.offer(excess(f, upper, opts), r, || "phi above omega+".into());
        w.offer(excess(lower, f, opts), r, || "phi below omega-".into());
        w.offer(excess(f, shifted.min(upper), opts), r, || "phi above min(s_pR, omega+)".into());
    }
    Ok(w.finish(name, opts.abs_tol))
}

/// Largest `|φ/S_p − 1|·r^ζ` over nodes with `r ≥ r_from`.
pub fn sommerfeld_remainder_constant(sol: &TfSolution, r_from: f64) -> Result<f64> {
    let sp = make_sommerfeld_params(sol.params.p)?;
    let kappa = gamma_strength(sol.params.p, sol.params.gamma);
    let mut worst: f64 = 0.0;
    for (&r, &f) in sol.phi.nodes().iter().zip(sol.phi.values()) {
        if r >= r_from {
            worst = worst.max((f / (kappa * s_p(&sp, r)?) - 1.0).abs() * r.powf(sp.zeta));
        }
    }
    Ok(worst)
}

/// Virial residuals below `virial_tol` relative to the energy scale, and
/// `3T ≤ A` when `p ≥ 6/5`.
pub fn check_virial(sol: &TfwSolution, opts: &CheckOptions) -> CheckReport {
    let t = &sol.terms;
    let scale = t.magnitude();
    let v = virial_residuals(t, sol.params.p);
    let mut w = Worst::new();
    if scale > 0.0 {
        for (label, x) in [("r1", v.r1), ("r2", v.r2), ("r3", v.r3)] {
            w.offer(x.abs() / scale, sol.params.p, || format!("virial residual {label}"));
        }
        if v.kinetic_bound.is_some() {
            w.offer((3.0 * t.kinetic - t.attraction) / scale - opts.rel_tol, sol.params.p, || {
                "3T above the attraction".into()
            });
        }
    }
    w.finish("virial", opts.virial_tol)
}

/// `Q < Z`; `N ≤ 5Z/(4β)` for `p ≥ 6/5`; `Q ≥ 0` for `p ≥ 4/3`; `Q ≤ B(p)`
/// in restored units when a bound is given; the critical-case bound at
/// `p = 3/2`.
pub fn check_excess_bounds(sol: &TfwSolution, bound: Option<&BoundResult>, opts: &CheckOptions) -> CheckReport {
    let prm = &sol.params;
    let tol = opts.abs_tol + opts.rel_tol * prm.z;
    let q = sol.q;
    let mut w = Worst::new();
    // Q < Z is strict; equality counts as a violation of size tol.
    w.offer(if q < prm.z { 0.0 } else { q - prm.z + 2.0 * tol }, prm.p, || "Q not below Z".into());
    if prm.p >= 1.2 {
        if let Ok(nb) = nam_particle_bound(prm.z) {
            w.offer(sol.n_particles - nb, prm.p, || "N above 5Z/(4 beta)".into());
        }
    }
    if prm.p >= 4.0 / 3.0 {
        w.offer(-q, prm.p, || "negative Q".into());
    }
    if let Some(b) = bound {
        match restore_units(b.b_value, prm.p, prm.big_a, prm.gamma) {
            Ok(limit) if (b.p - prm.p).abs() <= 1e-12 => {
                w.offer(q - limit, prm.p, || format!("Q above B(p) = {limit}"))
            }
            _ => w.offer(f64::INFINITY, prm.p, || format!("bound for p = {} does not match", b.p)),
        }
    }
    if prm.p == 1.5 {
        // At p = 3/2 the coupling enters through γ/√A.
        if let Ok(limit) = critical_excess_bound(prm.gamma / prm.big_a.sqrt(), prm.z) {
            w.offer(q - limit, prm.gamma, || format!("Q above the critical bound {limit}"));
        }
    }
    w.finish("excess_bounds", tol)
}

/// Energy of a density in the generalized TF functional together with the
/// terms of its coercivity lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityTerms {
    pub energy: f64,
    pub lower_bound: f64,
    pub norm_p: f64,
    pub repulsion: f64,
}

/// `E = (γ/p)∫ρ^p − Z∫ρ/r + D[ρ]` and the bound
/// `(γ/p)‖ρ‖_p^p − (4πZ/(3−p′))‖ρ‖_p − 2Z√D + D`, `p′ = p/(p−1)`.
pub fn coercivity_terms(rho: &RadialProfile, p: f64, gamma: f64, z: f64) -> CoercivityTerms {
    let r = rho.nodes();
    let h = rho.grid().h();
    let v = rho.values();
    let int_p = density_integral(r, h, &v.iter().map(|x| x.max(0.0).powf(p)).collect::<Vec<_>>());
    let over_r: Vec<f64> = r.iter().zip(v).map(|(r, x)| x / r).collect();
    let attraction = z * density_integral(r, h, &over_r);
    let hart = hartree_values(r, h, v);
    let rho_hart: Vec<f64> = v.iter().zip(&hart).map(|(a, b)| a * b).collect();
    let repulsion = 0.5 * density_integral(r, h, &rho_hart);
    let norm_p = int_p.powf(1.0 / p);
    let p_conj = p / (p - 1.0);
    CoercivityTerms {
        energy: gamma / p * int_p - attraction + repulsion,
        lower_bound: gamma / p * int_p - 4.0 * PI * z / (3.0 - p_conj) * norm_p
            - 2.0 * z * repulsion.sqrt()
            + repulsion,
        norm_p,
        repulsion,
    }
}

/// The TF energy of `ρ` dominates its coercivity lower bound.
pub fn check_coercivity(rho: &RadialProfile, p: f64, gamma: f64, z: f64, opts: &CheckOptions) -> CheckReport {
    let name = "coercivity";
    if p / (p - 1.0) >= 3.0 {
        return not_applicable(name, opts.abs_tol, "needs p > 3/2");
    }
    let c = coercivity_terms(rho, p, gamma, z);
    let mut w = Worst::new();
    w.offer(excess(c.lower_bound, c.energy, opts), p, || {
        format!("energy {} is below the bound {}", c.energy, c.lower_bound)
    });
    w.finish(name, opts.abs_tol)
}

/// `rψ` over the outer decade is below `decay_tol` of its peak, and `ψ` is
/// non-increasing beyond its maximum.
pub fn check_decay(sol: &TfwSolution, opts: &CheckOptions) -> CheckReport {
    let r = sol.psi.nodes();
    let s = sol.psi.values();
    let n = r.len();
    let rs: Vec<f64> = r.iter().zip(s).map(|(r, s)| r * s).collect();
    let peak = rs.iter().cloned().fold(0.0, f64::max);
    let mut w = Worst::new();
    if peak > 0.0 {
        let cut = r[n - 1] / 10.0;
        for i in 0..n {
            if r[i] >= cut {
                w.offer(rs[i] / peak, r[i], || "r psi in the outer decade".into());
            }
        }
        let s_peak = s.iter().cloned().fold(0.0, f64::max);
        let top = s.iter().position(|&x| x == s_peak).unwrap_or(0);
        for i in top..n - 1 {
            w.offer((s[i + 1] - s[i]) / s_peak, r[i + 1], || "increase of psi beyond its maximum".into());
        }
    }
    w.finish("decay", opts.decay_tol)
}

/// The Euler residual gate: the inequalities are stated for minimizers.
pub fn check_euler(sol: &TfwSolution, opts: &CheckOptions) -> CheckReport {
    let mut w = Worst::new();
    w.offer(sol.euler_residual, sol.params.p, || "Euler residual".into());
    w.finish("euler", opts.euler_tol)
}

/// Names of every check, in suite order.
pub const CHECK_NAMES: [&str; 10] = [
    "euler",
    "subharmonic_P",
    "lemma_g1",
    "t1",
    "z0",
    "tf_sommerfeld",
    "virial",
    "excess_bounds",
    "coercivity",
    "decay",
];

/// Inputs shared by the suite.
pub struct SuiteInput<'a> {
    pub tfw: &'a TfwSolution,
    /// TF atom at the same `p`, `γ`, `Z`; needed by the TF checks.
    pub tf: Option<&'a TfSolution>,
    /// `B(p)` at the solution's `p`.
    pub bound: Option<&'a BoundResult>,
}

/// Parses a comma-separated selection; `all` selects every check.
pub fn parse_selection(list: &str) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "all" {
            return Ok(CHECK_NAMES.to_vec());
        }
        match CHECK_NAMES.iter().find(|n| n.eq_ignore_ascii_case(item)) {
            Some(n) => out.push(*n),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "unknown check {item:?}; known: all, {}",
                    CHECK_NAMES.join(", ")
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("no checks selected".into()));
    }
    Ok(out)
}

fn run_one(name: &str, input: &SuiteInput<'_>, opts: &CheckOptions) -> CheckReport {
    let sol = input.tfw;
    let missing_tf = || not_applicable(name, opts.abs_tol, "no TF solution supplied");
    match name {
        "euler" => check_euler(sol, opts),
        "subharmonic_P" => check_subharmonic_p(sol, opts),
        "lemma_g1" => check_lemma_g1(sol, opts),
        "t1" => check_t1(sol, &opts.lambdas, opts),
        "z0" => check_z0(sol, &opts.radii, opts),
        "tf_sommerfeld" => match input.tf {
            Some(tf) => check_tf_sommerfeld(tf, opts.tf_radius, opts).unwrap_or_else(|e| CheckReport {
                name: name.to_string(),
                pass: false,
                violation: f64::INFINITY,
                location: Some(opts.tf_radius),
                tolerance: opts.abs_tol,
                detail: e.to_string(),
            }),
            None => missing_tf(),
        },
        "virial" => check_virial(sol, opts),
        "excess_bounds" => check_excess_bounds(sol, input.bound, opts),
        "coercivity" => match input.tf {
            Some(tf) => check_coercivity(&tf.rho, tf.params.p, tf.params.gamma, tf.params.z, opts),
            None => missing_tf(),
        },
        "decay" => check_decay(sol, opts),
        other => not_applicable(other, 0.0, "unknown check"),
    }
}

/// Runs the selected checks concurrently; the report keeps selection order.
pub fn run_suite(selection: &[&str], input: &SuiteInput<'_>, opts: &CheckOptions) -> Report {
    let checks = selection.par_iter().map(|name| run_one(name, input, opts)).collect();
    Report { header: report_header(), checks }
}

fn report_header() -> Vec<String> {
    vec![
        "Sommerfeld remainder constants are fixed by matching omega+ and omega- to phi at R \
         instead of by liminf definitions."
            .to_string(),
    ]
}

/// A collection of check outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Notes on how the checks deviate from a literal reading of the
    /// statements they test.
    pub header: Vec<String>,
    pub checks: Vec<CheckReport>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line per check: name, PASS/FAIL, violation, location, tolerance,
    /// detail.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for h in &self.header {
            let _ = writeln!(out, "# {h}");
        }
        for c in &self.checks {
            let loc = c.location.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
            let _ = writeln!(
                out,
                "{:<14} {} violation={:.3e} location={} tolerance={:.3e}{}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.violation,
                loc,
                c.tolerance,
                if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
