//! Crate-wide error types.

use thiserror::Error;

/// Errors from configuration, model construction, and the analytic machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Two inputs that must have equal length do not.
    #[error("length mismatch: {left_name} has {left}, {right_name} has {right}")]
    LengthMismatch {
        left_name: &'static str,
        left: usize,
        right_name: &'static str,
        right: usize,
    },

    /// An input that must be finite is NaN or infinite.
    #[error("non-finite input `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },

    /// A config file line could not be parsed.
    #[error("config parse error at line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },

    /// A config key is missing or its value is malformed.
    #[error("config key `{key}`: {reason}")]
    ConfigKey { key: String, reason: String },

    /// An operation was called on a scenario it does not apply to.
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Errors from the dual-decomposition solver.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] Error),

    /// The subgradient loop exhausted its iteration budget without producing
    /// a feasible iterate. Carries the primal trajectory for diagnosis.
    #[error("solver did not reach a feasible point in {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        primal_trajectory: Vec<f64>,
    },
}
