use std::fmt;

use thiserror::Error;

/// State invariants checked during propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    Trace,
    Hermiticity,
    Positivity,
    Purity,
    Norm,
    Finite,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Invariant::Trace => "trace preservation",
            Invariant::Hermiticity => "hermiticity",
            Invariant::Positivity => "positivity",
            Invariant::Purity => "purity bound",
            Invariant::Norm => "state normalization",
            Invariant::Finite => "finite entries",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("state is not normalized (|psi| = {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("{invariant} violated at step {step} (t = {time} ns): {detail}")]
    InvariantViolation {
        invariant: Invariant,
        step: usize,
        time: f64,
        detail: String,
    },

    #[error("singular steady-state system: {0}")]
    Singular(String),

    #[error("missing channel `{0}`")]
    MissingChannel(String),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("trajectory solver: {0}")]
    Trajectory(String),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical state invariants (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InvariantViolation { .. } | Error::Singular(_) | Error::Trajectory(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
