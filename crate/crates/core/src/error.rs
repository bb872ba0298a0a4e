use thiserror::Error;

/// Errors surfaced by model validation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A model invariant does not hold for the given data.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// Two grid-indexed objects do not share the same discretization.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An agent index is outside `0..n_agents`.
    #[error("agent index {index} out of range (population size {n_agents})")]
    AgentIndex { index: usize, n_agents: usize },

    /// The Picard iteration hit its iteration budget before the residual
    /// dropped below tolerance. Shrinking the segment length (larger `M`)
    /// or the damping factor usually helps.
    #[error("fixed-point iteration did not converge{}: residual {residual:.3e} after {iterations} iterations",
            match segment { Some(s) => format!(" on segment {s}"), None => String::new() })]
    NonConvergence {
        segment: Option<usize>,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}
