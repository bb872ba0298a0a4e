//! Independent oracles for the equilibrium solvers.
//!
//! Everything in this crate exists to check the main code path from the
//! outside: central finite differences against the costate-based
//! derivatives, a desk-scale discrete best-response search with its own
//! Euler integrator, and an empirical control-to-state stability probe.
//! Release builds of the solver stack simply do not depend on this crate.

mod brute;
mod fd;
mod lipschitz;

pub use brute::{brute_force_equilibrium, BruteForceConfig, BruteForceEquilibrium};
pub use fd::{fd_gateaux, fd_gateaux_weighted, FdGateaux};
pub use lipschitz::{lipschitz_probe, LipschitzReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Core(#[from] dissim_core::Error),

    /// The discrete best-response iteration revisited a configuration
    /// without settling; coarsen the level grid or damp the scenario.
    #[error("best-response iteration cycled after {sweeps} sweeps")]
    CycleDetected { sweeps: usize },

    #[error("unsupported oracle input: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, VerifyError>;
