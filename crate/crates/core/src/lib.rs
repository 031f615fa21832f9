//! Generalized Thomas-Fermi-Weizsäcker atoms.
//!
//! The crate solves the radial Euler equation of the TFW functional
//!
//! ```text
//! E(ψ) = A∫|∇ψ|² + (γ/p)∫ψ^{2p} − ∫Vψ² + D[ψ²]
//! ```
//!
//! and the generalized Thomas-Fermi equation for a single atom, evaluates
//! upper bounds on the excess charge `Q = N − Z`, and checks the associated
//! inequalities on solved instances.
//!
//! Modules:
//! * [`model`]: parameters, closed-form constants and scaling relations.
//! * [`sommerfeld`]: power-law solutions of `Δφ = 4πφ^{1/(p−1)}` and their
//!   super/subsolution variants.
//! * [`radial`]: logarithmic grids, quadrature, Hartree potential, Laplacian.
//! * [`solvers`]: TFW and TF atom solvers.
//! * [`bounds`]: the minimax bound `B(p)` and its sweep over `p`.
//! * [`verify`]: pass/fail checks of the inequalities on solver output.

pub mod bounds;
pub mod error;
pub mod io;
pub mod model;
mod optimize;
pub mod radial;
pub mod solvers;
pub mod sommerfeld;
pub mod verify;

pub use bounds::{BoundOptions, BoundResult, Branch, BranchOptimum};
pub use error::{Error, Result};
pub use model::{EnergyTerms, ModelParams, ScalingConstants, VirialResiduals};
pub use radial::{RadialGrid, RadialProfile};
pub use solvers::{SolverOptions, TfSolution, TfwSolution};
pub use sommerfeld::SommerfeldParams;
pub use verify::{CheckOptions, CheckReport, Report};
