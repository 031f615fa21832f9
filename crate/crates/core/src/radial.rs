//! Logarithmic radial grids, quadrature, the Hartree potential, a
//! finite-difference Laplacian and the P-function.
//!
//! Nodes are `r_i = r_min e^{ih}`. Integrals are taken in the log variable
//! `t = ln r` with the trapezoidal rule, so `∫f dr = ∫f r dt`.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{ensure, Error, Result};

/// Fraction of the particle number allowed in the outer decade of a grid.
pub const TAIL_MASS_LIMIT: f64 = 1e-3;

/// Strictly increasing, log-uniform radial nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    h: f64,
}

/// Values sampled on a shared [`RadialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

/// A profile whose entries are meaningful only on `valid`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedProfile {
    pub profile: RadialProfile,
    /// Node range on which the values are defined.
    pub valid: Range<usize>,
}

/// Log-spaced grid from `r_min` to `r_max` inclusive with `n` nodes.
pub fn make_grid(r_min: f64, r_max: f64, n: usize) -> Result<RadialGrid> {
    ensure(r_min > 0.0 && r_max > r_min && r_max.is_finite(), || {
        format!("need 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}")
    })?;
    ensure(n >= 2, || format!("a grid needs at least 2 nodes, got {n}"))?;
    let t0 = r_min.ln();
    let step = (r_max.ln() - t0) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| (t0 + step * i as f64).exp()).collect();
    nodes[0] = r_min;
    nodes[n - 1] = r_max;
    RadialGrid::from_nodes(nodes)
}

impl RadialGrid {
    /// Wraps explicit nodes, checking that they are log-uniform to 1e−12.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        ensure(n >= 2, || format!("a grid needs at least 2 nodes, got {n}"))?;
        ensure(nodes[0] > 0.0 && nodes.iter().all(|r| r.is_finite()), || {
            "grid nodes must be positive and finite".to_string()
        })?;
        let h = (nodes[n - 1].ln() - nodes[0].ln()) / (n - 1) as f64;
        ensure(h > 0.0, || "grid nodes must be increasing".to_string())?;
        let ratio = h.exp();
        for w in nodes.windows(2) {
            let q = w[1] / w[0];
            ensure((q / ratio - 1.0).abs() <= 1e-12, || {
                format!("grid is not log-uniform: ratio {q} vs {ratio}")
            })?;
        }
        Ok(Self { nodes, h })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Step `h` in `t = ln r`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Constant ratio `r_{i+1}/r_i`.
    pub fn ratio(&self) -> f64 {
        self.h.exp()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// The nodes `range` as a grid of their own.
    pub fn subgrid(&self, range: Range<usize>) -> Result<RadialGrid> {
        ensure(range.end <= self.len() && range.len() >= 2, || {
            format!("invalid subgrid range {range:?} of {}", self.len())
        })?;
        Ok(RadialGrid { nodes: self.nodes[range].to_vec(), h: self.h })
    }

    /// Trapezoidal `∫ f(r) dr` over the grid, with `f` given at the nodes.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        trapezoid_t(&self.nodes, self.h, f, |r, v| r * v)
    }
}

fn trapezoid_t(r: &[f64], h: f64, f: &[f64], weight: impl Fn(f64, f64) -> f64) -> f64 {
    let n = r.len();
    let mut s = 0.5 * (weight(r[0], f[0]) + weight(r[n - 1], f[n - 1]));
    for i in 1..n - 1 {
        s += weight(r[i], f[i]);
    }
    s * h
}

impl RadialProfile {
    /// Attaches values to a grid.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        ensure(values.len() == grid.len(), || {
            format!("{} values for a grid of {} nodes", values.len(), grid.len())
        })?;
        ensure(values.iter().all(|v| v.is_finite()), || {
            "profile values must be finite".to_string()
        })?;
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The profile on the nodes `range` only.
    pub fn restrict(&self, range: Range<usize>) -> Result<RadialProfile> {
        let grid = Arc::new(self.grid.subgrid(range.clone())?);
        Ok(RadialProfile { grid, values: self.values[range].to_vec() })
    }

    /// Applies `f` nodewise.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<RadialProfile> {
        let values = self.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        RadialProfile::new(self.grid.clone(), values)
    }

    /// Errors unless `other` lives on the same nodes.
    pub fn require_same_grid(&self, other: &RadialProfile) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grids of {} and {} nodes differ",
                self.len(),
                other.len()
            )))
        }
    }
}

/// Particle number `∫4πr²ρ dr`, including the ball inside the first node.
pub fn integrate_density(rho: &RadialProfile) -> Result<f64> {
    if let Some((i, v)) = rho.values().iter().enumerate().find(|(_, &v)| v < -1e-12) {
        return Err(Error::InvalidParameter(format!(
            "density {v} at node {i} is negative"
        )));
    }
    Ok(density_integral(rho.nodes(), rho.grid.h(), rho.values()))
}

pub(crate) fn density_integral(r: &[f64], h: f64, rho: &[f64]) -> f64 {
    let core = 4.0 * PI * rho[0] * r[0].powi(3) / 3.0;
    core + trapezoid_t(r, h, rho, |r, v| 4.0 * PI * r * r * r * v)
}

/// Fraction of the particle number carried by the outer decade of the grid.
pub fn outer_decade_fraction(rho: &RadialProfile) -> Result<f64> {
    let r = rho.nodes();
    let total = integrate_density(rho)?;
    if total <= 0.0 {
        return Ok(0.0);
    }
    let cut = rho.grid.r_max() / 10.0;
    let start = r.partition_point(|&x| x < cut);
    if start + 1 >= r.len() {
        return Ok(0.0);
    }
    let tail = trapezoid_t(&r[start..], rho.grid.h(), &rho.values()[start..], |r, v| {
        4.0 * PI * r * r * r * v
    });
    Ok(tail / total)
}

/// Hartree potential `(ρ ∗ 1/|·|)(r)` with the tail beyond `r_max` set to zero.
pub fn hartree_potential(rho: &RadialProfile) -> Result<RadialProfile> {
    let frac = outer_decade_fraction(rho)?;
    if frac > TAIL_MASS_LIMIT {
        return Err(Error::GridTooSmall { fraction: frac, limit: TAIL_MASS_LIMIT });
    }
    let values = hartree_values(rho.nodes(), rho.grid.h(), rho.values());
    RadialProfile::new(rho.grid.clone(), values)
}

/// `(1/r)∫_0^r 4πs²ρ ds + ∫_r^∞ 4πsρ ds` by cumulative trapezoids in `t`.
///
/// The outer integral is accumulated from the far end so that it keeps full
/// relative precision where it is small.
pub(crate) fn hartree_values(r: &[f64], h: f64, rho: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut out = vec![0.0; n];
    let mut inner = 4.0 * PI * rho[0] * r[0].powi(3) / 3.0;
    let f = |i: usize| 4.0 * PI * r[i].powi(3) * rho[i];
    out[0] = inner / r[0];
    for i in 1..n {
        inner += 0.5 * h * (f(i - 1) + f(i));
        out[i] = inner / r[i];
    }
    let g = |i: usize| 4.0 * PI * r[i] * r[i] * rho[i];
    let mut outer = 0.0;
    for i in (0..n - 1).rev() {
        outer += 0.5 * h * (g(i) + g(i + 1));
        out[i] += outer;
    }
    out
}

/// Second-order finite-difference `f″ + (2/r)f′` at interior nodes.
///
/// On a log grid this is `(f_tt + f_t)/r²` with central differences in `t`.
/// The two endpoint entries are set to zero and excluded from `valid`.
pub fn laplacian_radial(f: &RadialProfile) -> Result<FlaggedProfile> {
    let n = f.len();
    ensure(n >= 3, || format!("the Laplacian needs at least 3 nodes, got {n}"))?;
    let values = laplacian_values(f.nodes(), f.grid.h(), f.values());
    Ok(FlaggedProfile { profile: RadialProfile::new(f.grid.clone(), values)?, valid: 1..n - 1 })
}

pub(crate) fn laplacian_values(r: &[f64], h: f64, f: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let ftt = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
        let ft = (f[i + 1] - f[i - 1]) / (2.0 * h);
        out[i] = (ftt + ft) / (r[i] * r[i]);
    }
    out
}

/// `P(r) = √(4πψ² + φ²)`.
pub fn p_function(psi: &RadialProfile, phi: &RadialProfile) -> Result<RadialProfile> {
    psi.require_same_grid(phi)?;
    let values = psi
        .values()
        .iter()
        .zip(phi.values())
        .map(|(&s, &f)| (4.0 * PI * s * s + f * f).sqrt())
        .collect();
    RadialProfile::new(psi.grid.clone(), values)
}
