//! Crate-wide error type.
//!
//! Parameter and feasibility violations are distinct from numerical solver
//! failures so callers (notably the CLI) can map them to different exit codes.

use thiserror::Error;

/// Errors produced by model construction, generators, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a structural constraint (wrong range, wrong scenario).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Parameters are structurally fine but define no realizable model
    /// (e.g. an edge probability falls outside [0, 1]).
    #[error("infeasible model: {0}")]
    Infeasible(String),
    /// An iterative solver failed to reach its tolerance.
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
