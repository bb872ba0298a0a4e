//! Equilibrium solvers for a continuous-time opinion game with dissimulation.
//!
//! A population of `N` agents holds true judgments `x_i(t) ∈ R^d` that drift
//! toward the judgments the others choose to *express*, `ω_j(t)`, through a
//! compactly supported interaction kernel. Each agent picks her expressed
//! judgment to minimize a running cost that trades off cognitive dissonance
//! (`|ω_i − x_i|²`), persuasion/conformity against the population average
//! (`|ω̄ − x_i|²`, weighted by `δ_i`), and sensitivity to an exogenous signal
//! `λ(x̄)` (weighted by `ζ_i`).
//!
//! The crate computes two kinds of equilibria of this game on a finite
//! horizon, both via forward state integration, backward costate integration
//! and projected Picard iteration on the resulting fixed-point map:
//!
//! - open-loop Nash equilibria ([`nash`]), and
//! - weighted-sum Pareto equilibria ([`pareto`]).
//!
//! Longer horizons are handled by time continuation: the horizon is split
//! into segments short enough for the fixed-point iteration to contract,
//! segment solutions are chained through their terminal states, and the
//! final control is the polygonal path through the segment boundary values.

pub mod adjoint;
pub mod dynamics;
mod error;
pub mod model;
pub mod nash;
pub mod pareto;
pub mod sampling;
mod solver;

pub use error::Error;
pub use solver::{SolveReport, SolverConfig};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
