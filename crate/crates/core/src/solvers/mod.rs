//! Converged atomic solutions of the TFW Euler equation and of the
//! generalized Thomas-Fermi equation.

mod banded;
mod tf;
mod tfw;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::model::{EnergyTerms, ModelParams};
use crate::radial::{
    density_integral, hartree_values, make_grid, p_function, RadialGrid,
    RadialProfile,
};

pub use tf::solve_tf;
pub use tfw::solve_tfw;

/// Default number of grid nodes.
pub const DEFAULT_GRID_N: usize = 4000;

/// Default innermost node, `1e−6/Z`.
pub fn default_r_min(z: f64) -> f64 {
    1e-6 / z
}

/// Default outer radius of the TFW grid.
///
/// Positive ions decay like `exp(−2√(Qr/A))`; `r_max = 10⁴` puts the whole
/// outer decade of the grid in the region where `rψ` has fallen below
/// `10⁻⁶` of its peak. At `p = 3/2` with `γ ≥ 4√π` the decay is the power
/// law `ψ ≈ c/r²`, which needs `r_max = 10⁹` for the same.
pub fn default_tfw_r_max(params: &ModelParams) -> f64 {
    if params.p <= 1.5 {
        1e9
    } else {
        1e4
    }
}

/// Default outer radius of the TF grid.
pub const DEFAULT_TF_R_MAX: f64 = 60.0;

/// The default TFW grid for `params`.
pub fn default_tfw_grid(params: &ModelParams) -> Result<RadialGrid> {
    make_grid(default_r_min(params.z), default_tfw_r_max(params), DEFAULT_GRID_N)
}

/// The default TF grid for `params`.
pub fn default_tf_grid(params: &ModelParams) -> Result<RadialGrid> {
    make_grid(default_r_min(params.z), DEFAULT_TF_R_MAX, DEFAULT_GRID_N)
}

/// Knobs of the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Newton iteration cap per continuation stage.
    pub max_iter: usize,
    /// Convergence threshold on the largest update of `ln ψ`.
    pub step_tol: f64,
    /// Convergence threshold on the largest update of `rφ`, relative to `Z`.
    pub scf_tol: f64,
    /// Required bound on the normalized Euler residual.
    pub euler_tol: f64,
    /// Step damping in the final stage, where the Hartree term is exact.
    pub damping: f64,
    /// Relative agreement required between the two bracketing TF shots.
    pub shoot_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            step_tol: 1e-10,
            scf_tol: 1e-12,
            euler_tol: 1e-6,
            damping: 0.5,
            shoot_tol: 1e-9,
        }
    }
}

/// A converged TFW atom.
#[derive(Clone, Debug, PartialEq)]
pub struct TfwSolution {
    pub params: ModelParams,
    /// Square root of the density.
    pub psi: RadialProfile,
    /// Mean-field potential `Z/r − ρ ∗ 1/|·|`.
    pub phi: RadialProfile,
    pub terms: EnergyTerms,
    /// Particle number `N = ∫ψ²`.
    pub n_particles: f64,
    /// Excess charge `N − Z`.
    pub q: f64,
    pub euler_residual: f64,
    /// Newton iterations summed over all stages.
    pub iterations: usize,
}

impl TfwSolution {
    /// Builds a solution record from `ψ` and `φ`, recomputing every derived
    /// quantity.
    pub fn assemble(
        params: ModelParams,
        psi: RadialProfile,
        phi: RadialProfile,
        iterations: usize,
    ) -> Result<Self> {
        psi.require_same_grid(&phi)?;
        let terms = energy_terms(&psi, &params)?;
        let rho: Vec<f64> = psi.values().iter().map(|s| s * s).collect();
        let n_particles = density_integral(psi.nodes(), psi.grid().h(), &rho);
        let euler_residual = euler_residual(&psi, &phi, &params)?;
        Ok(Self {
            params,
            terms,
            n_particles,
            q: n_particles - params.z,
            euler_residual,
            iterations,
            psi,
            phi,
        })
    }

    /// Density `ρ = ψ²`.
    pub fn rho(&self) -> RadialProfile {
        self.psi.map(|_, s| s * s).expect("squares of finite values are finite")
    }

    /// `P = √(4πψ² + φ²)`.
    pub fn p_profile(&self) -> RadialProfile {
        p_function(&self.psi, &self.phi).expect("ψ and φ share a grid")
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.psi.grid()
    }
}

/// A converged generalized TF atom.
#[derive(Clone, Debug, PartialEq)]
pub struct TfSolution {
    pub params: ModelParams,
    /// Potential `φ = V − ρ ∗ 1/|·|`.
    pub phi: RadialProfile,
    /// Density `(φ₊/γ)^{1/(p−1)}`.
    pub rho: RadialProfile,
    /// Particle number `∫ρ`.
    pub n_particles: f64,
    /// Neutral-atom slope `−(rφ)′(0)`.
    pub slope: f64,
    /// Number of shooting stages used to reach the outer node.
    pub stages: usize,
}

/// Normalized sup-norm residual of `−AΔψ + (γψ^{2p−2} − φ)ψ = 0`.
///
/// On the log grid the equation is divided by `ψ` and multiplied by `r²`:
///
/// ```text
/// R = −A(ψ_tt + ψ_t)/ψ + r²(γψ^{2p−2} − φ)
/// ```
///
/// with the ratios `ψ_{i±1}/ψ_i` taken through `expm1` of differences of
/// `ln ψ`. This form does not lose digits to cancellation near the nucleus,
/// where `Δψ` and `φψ` are large and nearly opposite. The result is
/// `max|R|` over interior nodes divided by `max r²(|φ| + γψ^{2p−2})`. Nodes
/// where `ψ` or a neighbour is not a positive normal double are skipped.
pub fn euler_residual(psi: &RadialProfile, phi: &RadialProfile, params: &ModelParams) -> Result<f64> {
    psi.require_same_grid(phi)?;
    let n = psi.len();
    ensure(n >= 3, || "the Euler residual needs at least 3 nodes".to_string())?;
    let r = psi.nodes();
    let h = psi.grid().h();
    let s = psi.values();
    let f = phi.values();
    let e = 2.0 * params.p - 2.0;
    let up = 1.0 / (h * h) + 0.5 / h;
    let down = 1.0 / (h * h) - 0.5 / h;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 1..n - 1 {
        let local = params.gamma * s[i].max(0.0).powf(e);
        scale = scale.max(r[i] * r[i] * (f[i].abs() + local));
        if !s[i - 1..=i + 1].iter().all(|x| x.is_normal() && *x > 0.0) {
            continue;
        }
        let v = s[i].ln();
        let kinetic = up * (s[i + 1].ln() - v).exp_m1() + down * (s[i - 1].ln() - v).exp_m1();
        let res = -params.big_a * kinetic + r[i] * r[i] * (local - f[i]);
        worst = worst.max(res.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// The four energy terms of `ψ` in the Coulomb potential `Z/r`.
pub fn energy_terms(psi: &RadialProfile, params: &ModelParams) -> Result<EnergyTerms> {
    ensure(psi.values().iter().all(|&v| v >= 0.0), || "ψ must be nonnegative".to_string())?;
    let r = psi.nodes();
    let h = psi.grid().h();
    let s = psi.values();
    let n = s.len();
    let rho: Vec<f64> = s.iter().map(|v| v * v).collect();
    let hart = hartree_values(r, h, &rho);
    let deriv = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * h)
        } else {
            (s[i + 1] - s[i - 1]) / (2.0 * h)
        }
    };
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = 0.5 * (f(0) + f(n - 1));
        for i in 1..n - 1 {
            acc += f(i);
        }
        acc * h
    };
    let kinetic = params.big_a * trap(&|i| {
        let d = deriv(i);
        4.0 * PI * r[i] * d * d
    });
    let tf = params.gamma / params.p
        * trap(&|i| 4.0 * PI * r[i].powi(3) * s[i].powf(2.0 * params.p));
    let attraction = trap(&|i| 4.0 * PI * r[i] * r[i] * params.z * rho[i]);
    let repulsion = 0.5 * trap(&|i| 4.0 * PI * r[i].powi(3) * rho[i] * hart[i]);
    Ok(EnergyTerms { kinetic, tf, attraction, repulsion })
}
