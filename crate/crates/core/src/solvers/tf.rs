//! Neutral-atom shooting for the generalized Thomas-Fermi equation.
//!
//! With `u = rφ` the equation `Δφ = 4π(φ₊/γ)^{1/(p−1)}` becomes
//! `u″ = 4πr(u₊/(γr))^{1/(p−1)}`, `u(0) = Z`. The neutral solution is the
//! separatrix between trajectories that cross zero (slope too steep) and
//! trajectories that turn upward (slope too shallow); the initial slope is
//! found by bisection between the two families.
//!
//! Neighbouring trajectories separate like a power of `r`, so one bisection
//! to machine precision only resolves the separatrix out to a finite radius.
//! Past that radius the shot is restarted from the last reliable node,
//! bisecting again on the local slope.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{SolverOptions, TfSolution};
use crate::error::{ensure, Error, Result};
use crate::model::ModelParams;
use crate::radial::{integrate_density, RadialGrid, RadialProfile};

/// Largest RK4 step in `t = ln r`.
const MAX_DT: f64 = 1e-3;
/// Step and extent in `t` used to classify a trajectory past the last node.
const CLASSIFY_DT: f64 = 1e-2;
const CLASSIFY_SPAN: f64 = 40.0;
const MAX_STAGES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fate {
    /// `u` reached zero: the slope was too steep.
    Crosses,
    /// `u′` became nonnegative: the slope was too shallow.
    TurnsUp,
    /// Neither happened within the classification window.
    Undecided,
}

struct Shot {
    fate: Fate,
    /// `(u, u′)` at each node reached before the fate was decided.
    states: Vec<(f64, f64)>,
}

struct Equation {
    q: f64,
    gamma: f64,
}

impl Equation {
    /// Derivative of `(u, u′)` with respect to `t = ln r`.
    fn rhs(&self, t: f64, y: [f64; 2]) -> [f64; 2] {
        let r = t.exp();
        let up = y[0].max(0.0);
        [r * y[1], r * r * 4.0 * PI * (up / (self.gamma * r)).powf(self.q)]
    }

    fn rk4(&self, t: f64, y: [f64; 2], dt: f64) -> [f64; 2] {
        let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + dt / 2.0, add(y, k1, dt / 2.0));
        let k3 = self.rhs(t + dt / 2.0, add(y, k2, dt / 2.0));
        let k4 = self.rhs(t + dt, add(y, k3, dt));
        [
            y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    fn fate_of(y: [f64; 2]) -> Option<Fate> {
        if y[0] <= 0.0 {
            Some(Fate::Crosses)
        } else if y[1] >= 0.0 {
            Some(Fate::TurnsUp)
        } else {
            None
        }
    }

    /// Integrates from `ts[0]` with state `y0`, recording every node, then
    /// keeps going past the last node until the trajectory is classified.
    fn shoot(&self, ts: &[f64], y0: [f64; 2], record: bool) -> Shot {
        let mut states = Vec::with_capacity(if record { ts.len() } else { 0 });
        let mut y = y0;
        if record {
            states.push((y[0], y[1]));
        }
        for j in 1..ts.len() {
            let span = ts[j] - ts[j - 1];
            let m = (span / MAX_DT).ceil().max(1.0) as usize;
            let dt = span / m as f64;
            let mut t = ts[j - 1];
            for _ in 0..m {
                y = self.rk4(t, y, dt);
                t += dt;
                if let Some(fate) = Self::fate_of(y) {
                    return Shot { fate, states };
                }
            }
            if record {
                states.push((y[0], y[1]));
            }
        }
        let mut t = ts[ts.len() - 1];
        let end = t + CLASSIFY_SPAN;
        while t < end {
            y = self.rk4(t, y, CLASSIFY_DT);
            t += CLASSIFY_DT;
            if let Some(fate) = Self::fate_of(y) {
                return Shot { fate, states };
            }
        }
        Shot { fate: Fate::Undecided, states }
    }
}

/// Bisects on `s` until `lo` (turns up) and `hi` (crosses) are adjacent
/// doubles. Widens the initial bracket if needed.
fn bisect(
    eq: &Equation,
    ts: &[f64],
    start: &dyn Fn(f64) -> [f64; 2],
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64)> {
    let fate = |s: f64| eq.shoot(ts, start(s), false).fate;
    let mut widen = 0;
    while fate(hi) != Fate::Crosses {
        hi = lo + 2.0 * (hi - lo);
        widen += 1;
        if widen > 200 {
            return Err(Error::NonConvergence {
                iterations: widen,
                detail: format!("no zero-crossing trajectory found up to slope {hi:.6e}"),
            });
        }
    }
    while fate(lo) != Fate::TurnsUp {
        lo = hi - 2.0 * (hi - lo);
        widen += 1;
        if widen > 400 {
            return Err(Error::NonConvergence {
                iterations: widen,
                detail: format!("no upturning trajectory found down to slope {lo:.6e}"),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match fate(mid) {
            Fate::Crosses => hi = mid,
            _ => lo = mid,
        }
    }
    Ok((lo, hi))
}

/// Solves the generalized TF equation for a neutral atom on `grid`.
pub fn solve_tf(params: &ModelParams, grid: &RadialGrid, opts: &SolverOptions) -> Result<TfSolution> {
    params.validate()?;
    ensure(params.k == 1, || format!("the atomic solver needs K = 1, got K = {}", params.k))?;
    ensure(params.p > 1.5 && params.p < 2.0, || {
        format!("the TF solver needs 3/2 < p < 2, got p = {}", params.p)
    })?;
    ensure(grid.len() >= 16, || format!("the TF solver needs at least 16 nodes, got {}", grid.len()))?;

    let q = 1.0 / (params.p - 1.0);
    let z = params.z;
    let eq = Equation { q, gamma: params.gamma };
    let r = grid.nodes();
    let n = r.len();
    let ts: Vec<f64> = r.iter().map(|x| x.ln()).collect();

    // Near the nucleus u = Z − s r + c r^{3−q} + …
    let r0 = r[0];
    let c = 4.0 * PI * (z / params.gamma).powf(q) / ((2.0 - q) * (3.0 - q));
    let origin = move |s: f64| [z - s * r0 + c * r0.powf(3.0 - q), -s + c * (3.0 - q) * r0.powf(2.0 - q)];

    let mut u = vec![0.0; n];
    let mut start = 0;
    let mut stages = 0;
    let mut slope = f64::NAN;
    let mut anchor = (0.0, 0.0);
    let mut bracket = (0.0, z.max(1.0));
    while start < n - 1 {
        if stages >= MAX_STAGES {
            return Err(Error::NonConvergence {
                iterations: stages,
                detail: format!("shooting stalled at r = {:.6e}", r[start]),
            });
        }
        let tail = &ts[start..];
        let from_anchor = move |s: f64| [anchor.0, -s];
        let start_fn: &dyn Fn(f64) -> [f64; 2] = if stages == 0 { &origin } else { &from_anchor };
        let (lo, hi) = bisect(&eq, tail, start_fn, bracket.0, bracket.1)?;
        if stages == 0 {
            slope = 0.5 * (lo + hi);
        }
        let a = eq.shoot(tail, start_fn(lo), true).states;
        let b = eq.shoot(tail, start_fn(hi), true).states;
        let good = a
            .iter()
            .zip(&b)
            .take_while(|(x, y)| (x.0 - y.0).abs() <= opts.shoot_tol * 0.5 * (x.0 + y.0).abs())
            .count();
        if good < 2 && start + good < n {
            return Err(Error::NonConvergence {
                iterations: stages,
                detail: format!(
                    "bracketing shots separate immediately at r = {:.6e}",
                    r[start]
                ),
            });
        }
        for j in 0..good {
            u[start + j] = 0.5 * (a[j].0 + b[j].0);
        }
        if start + good >= n {
            break;
        }
        let g = good - 1;
        anchor = (0.5 * (a[g].0 + b[g].0), 0.5 * (a[g].1 + b[g].1));
        let s0 = -anchor.1;
        bracket = (s0 * (1.0 - 1e-6), s0 * (1.0 + 1e-6));
        start += g;
        stages += 1;
    }

    let grid = Arc::new(grid.clone());
    let phi = RadialProfile::new(grid.clone(), (0..n).map(|i| u[i] / r[i]).collect())?;
    let rho = phi.map(|_, f| (f.max(0.0) / params.gamma).powf(q))?;
    let n_particles = integrate_density(&rho)?;
    Ok(TfSolution { params: *params, phi, rho, n_particles, slope, stages: stages + 1 })
}
