use thiserror::Error;

/// Errors raised by the solver and its oracles.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum NhotaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("capability not supported: {0}")]
    Capability(String),

    /// An oracle produced a NaN or infinite value.
    #[error("oracle returned a non-finite value while evaluating {what}")]
    OracleFailure { what: &'static str },

    /// The inner solver stopped without certifying a step, either out of
    /// iterations or because no representable decrease remained.
    #[error("inner solver stopped after {iters} iterations (residual {residual:e}, threshold {threshold:e})")]
    InnerFailure {
        iters: usize,
        residual: f64,
        threshold: f64,
        /// `f(x) − (model(y) + h(y))` at the last iterate.
        model_decrease: f64,
    },

    /// The regularization doubling budget ran out without an accepted step.
    #[error(
        "line search failed at outer iteration {iteration} after {doublings} doublings (M = {m:e})"
    )]
    LineSearchFailure {
        iteration: usize,
        doublings: usize,
        m: f64,
    },
}

pub type Result<T, E = NhotaError> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(NhotaError::DimensionMismatch { expected, got })
    }
}
