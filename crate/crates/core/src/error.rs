use alloc::string::String;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("memory budget exceeded: {needed} bytes needed, {budget} allowed")]
    MemoryBudget { needed: usize, budget: usize },
    #[error("no convergence after {steps} steps (last change {last_change:e})")]
    NotConverged { steps: usize, last_change: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
