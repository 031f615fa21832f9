//! Newton solver for the radial TFW Euler equation.
//!
//! Unknowns are `v = ln ψ` and `w = rφ = Z − rH` at every node, interleaved
//! as `[v₀, w₀, v₁, w₁, …]`. Working with `ln ψ` keeps ψ positive and keeps
//! Newton away from the trivial solution `ψ = 0`; `w` stays bounded by `Z`
//! and tends to `−Q` at large radii.
//!
//! On the log grid `t = ln r` the two equations read
//!
//! ```text
//! −A(ψ_tt + ψ_t)/ψ + r²γψ^{2p−2} − r w = 0
//! w_tt − w_t = 4πr³ψ²
//! ```
//!
//! with the nuclear cusp `ψ′/ψ = −Z/(2A)` at the first node, a decaying
//! exponential tail at the last node, `w_t = w − Z` at the first node and
//! `w_t = 0` at the last. The grid is grown by continuation in `r_max`.
//! A final stage replaces the discrete Poisson equation by the Hartree
//! quadrature used everywhere else, so that `φ` is exactly `Z/r − ρ ∗ 1/|·|`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::banded::BandMatrix;
use super::{SolverOptions, TfwSolution};
use crate::error::{ensure, Error, Result};
use crate::model::ModelParams;
use crate::radial::{hartree_values, outer_decade_fraction, RadialGrid, RadialProfile, TAIL_MASS_LIMIT};

/// Nodes with `ln ψ` more than this far below the maximum are numerically
/// dead: they neither limit the step nor take part in the convergence test.
const SIGNIFICANT_DEPTH: f64 = 40.0;

/// Largest update of `ln ψ` applied at any single node.
const MAX_LOG_STEP: f64 = 1e3;

/// A Newton step on `ln ψ` below this that fails to halve for
/// `STALL_COUNT` iterations in a row has reached the rounding floor.
const STALL_LEVEL: f64 = 1e-7;
const STALL_COUNT: usize = 5;

/// Radius of the first continuation stage and growth factor per stage.
const FIRST_STAGE_RADIUS: f64 = 100.0;
const STAGE_GROWTH: f64 = 10.0;

struct Problem<'a> {
    r: &'a [f64],
    h: f64,
    p: f64,
    gamma: f64,
    big_a: f64,
    z: f64,
    /// Use the Hartree quadrature instead of the discrete Poisson equation.
    exact_hartree: bool,
}

/// Decay rate `s = d ln ψ/dt` of the tail and its partial derivatives in
/// `v` and `w`.
///
/// With `ν = (r²γψ^{2p−2} − rw)/A` frozen, `ψ_tt + ψ_t = νψ` has the
/// decaying solution `e^{st}`, `s = −(1 + √(1+4ν))/2`.
fn tail_rate(v: f64, w: f64, r: f64, p: f64, gamma: f64, big_a: f64) -> (f64, f64, f64) {
    let e = ((2.0 * p - 2.0) * v).exp();
    let nu = (gamma * e * r * r - r * w) / big_a;
    if nu <= -0.25 {
        return (-0.5, 0.0, 0.0);
    }
    let rt = (1.0 + 4.0 * nu).sqrt();
    let ds = -1.0 / rt;
    (
        (1.0 - rt) / 2.0 - 1.0,
        ds * r * r * gamma * (2.0 * p - 2.0) * e / big_a,
        -ds * r / big_a,
    )
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.r.len()
    }

    /// Residual and Jacobian at `x`.
    fn linearize(&self, x: &[f64]) -> (Vec<f64>, BandMatrix) {
        let n = self.n();
        let (r, h, p) = (self.r, self.h, self.p);
        let (ga, big_a, z) = (self.gamma, self.big_a, self.z);
        let v = |i: usize| x[2 * i];
        let w = |i: usize| x[2 * i + 1];
        let a = 1.0 / (h * h) + 1.0 / (2.0 * h);
        let c = 1.0 / (h * h) - 1.0 / (2.0 * h);
        let s0 = -z * r[0] / (2.0 * big_a);
        let (s_n, dsv, dsw) = tail_rate(v(n - 1), w(n - 1), r[n - 1], p, ga, big_a);

        let mut ep = vec![0.0; n];
        let mut em = vec![0.0; n];
        for i in 0..n - 1 {
            ep[i] = (v(i + 1) - v(i)).exp();
            em[i + 1] = (v(i) - v(i + 1)).exp();
        }
        em[0] = ep[0] - 2.0 * h * s0;

        let rho: Vec<f64> = (0..n).map(|i| (2.0 * v(i)).exp()).collect();
        let mut f = vec![0.0; 2 * n];
        let mut jac = BandMatrix::zeros(2 * n, 2, 2);

        for i in 0..n - 1 {
            let row = 2 * i;
            let pw = ((2.0 * p - 2.0) * v(i)).exp();
            f[row] = -big_a * (a * ep[i] - 2.0 / (h * h) + c * em[i]) + r[i] * r[i] * ga * pw
                - r[i] * w(i);
            let nonlin = r[i] * r[i] * ga * (2.0 * p - 2.0) * pw;
            if i == 0 {
                jac.set(row, 0, big_a * (a + c) * ep[0] + nonlin);
                jac.set(row, 2, -big_a * (a + c) * ep[0]);
            } else {
                jac.set(row, row, big_a * (a * ep[i] + c * em[i]) + nonlin);
                jac.set(row, row + 2, -big_a * a * ep[i]);
                jac.set(row, row - 2, -big_a * c * em[i]);
            }
            jac.set(row, row + 1, -r[i]);
        }
        let row = 2 * (n - 1);
        f[row] = v(n - 1) - v(n - 2) - h * s_n;
        jac.set(row, row, 1.0 - h * dsv);
        jac.set(row, row - 2, -1.0);
        jac.set(row, row + 1, -h * dsw);

        // Poisson rows: Lf = f_tt − f_t with ghosts f₋₁ = f₁ − 2h(f₀ − Z₀)
        // and f_n = f_{n−2}.
        let (target, z_ghost): (Vec<f64>, f64) = if self.exact_hartree {
            let hart = hartree_values(r, h, &rho);
            ((0..n).map(|i| w(i) - (z - r[i] * hart[i])).collect(), 0.0)
        } else {
            ((0..n).map(w).collect(), z)
        };
        for i in 0..n {
            let row = 2 * i + 1;
            let fm = if i == 0 { target[1] - 2.0 * h * (target[0] - z_ghost) } else { target[i - 1] };
            let fp = if i == n - 1 { target[n - 2] } else { target[i + 1] };
            let mut lw = (fp - 2.0 * target[i] + fm) / (h * h) - (fp - fm) / (2.0 * h);
            if !self.exact_hartree {
                lw -= 4.0 * PI * r[i].powi(3) * rho[i];
            }
            f[row] = lw;

            let mut diag = -2.0 / (h * h);
            if i == 0 {
                diag -= 2.0 * h * a;
                jac.set(row, row + 2, c + a);
            } else if i == n - 1 {
                jac.set(row, row - 2, a + c);
            } else {
                jac.set(row, row + 2, c);
                jac.set(row, row - 2, a);
            }
            jac.set(row, row, diag);
            jac.set(row, row - 1, -8.0 * PI * r[i].powi(3) * rho[i]);
        }
        (f, jac)
    }

    /// Damped Newton iteration. Returns the iteration count on success.
    fn newton(&self, x: &mut [f64], opts: &SolverOptions, base_damping: f64) -> Result<usize> {
        let n = self.n();
        let mut last = (f64::INFINITY, f64::INFINITY);
        let mut stalled = 0;
        for it in 0..opts.max_iter {
            let (f, jac) = self.linearize(x);
            let mut dx: Vec<f64> = f.iter().map(|v| -v).collect();
            jac.solve(&mut dx).ok_or_else(|| Error::NonConvergence {
                iterations: it,
                detail: "singular Newton matrix".to_string(),
            })?;
            if dx.iter().any(|d| !d.is_finite()) {
                return Err(Error::NonConvergence {
                    iterations: it,
                    detail: "non-finite Newton step".to_string(),
                });
            }
            let v_max = (0..n).map(|i| x[2 * i]).fold(f64::NEG_INFINITY, f64::max);
            let step_v = (0..n)
                .filter(|&i| x[2 * i] > v_max - SIGNIFICANT_DEPTH)
                .map(|i| dx[2 * i].abs())
                .fold(0.0, f64::max);
            let step_w = (0..n).map(|i| dx[2 * i + 1].abs()).fold(0.0, f64::max) / self.z;
            let lambda = if step_v > 0.0 { base_damping.min(1.0 / step_v) } else { base_damping };
            for i in 0..n {
                x[2 * i] += (lambda * dx[2 * i]).clamp(-MAX_LOG_STEP, MAX_LOG_STEP);
                x[2 * i + 1] += lambda * dx[2 * i + 1];
            }
            // Far out in a power-law tail the equations are evaluated with
            // an absolute rounding error of order r·ε, so ln ψ can stall
            // slightly above step_tol. A step that is already small and has
            // stopped contracting is treated as converged; the Euler residual
            // is checked by the caller either way.
            stalled = if step_v < STALL_LEVEL && step_v > 0.5 * last.0 { stalled + 1 } else { 0 };
            last = (step_v, step_w);
            if step_w < opts.scf_tol && (step_v < opts.step_tol || stalled >= STALL_COUNT) {
                return Ok(it + 1);
            }
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            detail: format!(
                "last updates: max |d ln psi| = {:.3e}, max |d(r phi)|/Z = {:.3e}",
                last.0, last.1
            ),
        })
    }
}

/// Hydrogen-like starting density with `∫ψ₀² = Z`.
fn initial_guess(r: &[f64], h: f64, z: f64) -> Vec<f64> {
    let amp = (3.0 * z.powi(4) / (256.0 * PI)).sqrt();
    let psi: Vec<f64> = r.iter().map(|&x| amp / (1.0 + z * x / 4.0).powi(2)).collect();
    let rho: Vec<f64> = psi.iter().map(|s| s * s).collect();
    let hart = hartree_values(r, h, &rho);
    let mut x = vec![0.0; 2 * r.len()];
    for i in 0..r.len() {
        x[2 * i] = psi[i].ln();
        x[2 * i + 1] = z - r[i] * hart[i];
    }
    x
}

/// Solves the TFW Euler equation for one atom on `grid`.
pub fn solve_tfw(params: &ModelParams, grid: &RadialGrid, opts: &SolverOptions) -> Result<TfwSolution> {
    params.validate()?;
    ensure(params.k == 1, || format!("the atomic solver needs K = 1, got K = {}", params.k))?;
    ensure(params.p >= 1.5 && params.p < 2.0, || {
        format!("the TFW solver needs 3/2 <= p < 2, got p = {}", params.p)
    })?;
    ensure(grid.len() >= 16, || format!("the TFW solver needs at least 16 nodes, got {}", grid.len()))?;

    let r = grid.nodes();
    let h = grid.h();
    let n = r.len();
    let first = FIRST_STAGE_RADIUS.min(grid.r_max());
    let mut k = (r.partition_point(|&x| x < first) + 1).clamp(16.min(n), n);
    let mut x = initial_guess(&r[..k], h, params.z);
    let mut iterations = 0;

    let problem = |len: usize, exact_hartree: bool| Problem {
        r: &r[..len],
        h,
        p: params.p,
        gamma: params.gamma,
        big_a: params.big_a,
        z: params.z,
        exact_hartree,
    };

    loop {
        iterations += problem(k, false).newton(&mut x, opts, 1.0)?;
        if k == n {
            break;
        }
        let target = r[k - 1] * STAGE_GROWTH;
        let k2 = (r.partition_point(|&x| x < target) + 1).min(n);
        // Extend ln ψ by marching the local decay rate with rφ frozen.
        let w_end = x[2 * k - 1];
        let mut vc = x[2 * k - 2];
        x.reserve(2 * (k2 - k));
        for &rn in &r[k..k2] {
            vc += h * tail_rate(vc, w_end, rn, params.p, params.gamma, params.big_a).0;
            x.push(vc);
            x.push(w_end);
        }
        k = k2;
    }
    iterations += problem(n, true).newton(&mut x, opts, opts.damping)?;

    let grid = Arc::new(grid.clone());
    let psi_values: Vec<f64> = (0..n).map(|i| x[2 * i].exp()).collect();
    let psi = RadialProfile::new(grid.clone(), psi_values)?;
    let rho = psi.map(|_, s| s * s)?;
    let fraction = outer_decade_fraction(&rho)?;
    if fraction > TAIL_MASS_LIMIT {
        return Err(Error::GridTooSmall { fraction, limit: TAIL_MASS_LIMIT });
    }
    let hart = hartree_values(r, h, rho.values());
    let phi = RadialProfile::new(grid, (0..n).map(|i| params.z / r[i] - hart[i]).collect())?;
    let sol = TfwSolution::assemble(*params, psi, phi, iterations)?;
    if !(sol.euler_residual <= opts.euler_tol) {
        return Err(Error::NonConvergence {
            iterations,
            detail: format!(
                "Euler residual {:.3e} exceeds tolerance {:.1e}",
                sol.euler_residual, opts.euler_tol
            ),
        });
    }
    Ok(sol)
}
