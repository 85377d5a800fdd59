//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a precondition (range, length, ordering).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A numeric routine failed to converge or bracket a root.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The Markov chain has no proper steady state (absorbing termination).
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    /// No policy can satisfy the loss constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
