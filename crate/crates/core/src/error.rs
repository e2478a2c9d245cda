use thiserror::Error;

/// Errors raised by the solver, the analysis routines and the oracles.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value in {context} at component {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("matrix is not symmetric positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },

    #[error("matrix is singular ({context})")]
    Singular { context: &'static str },

    #[error("constraint matrix is rank deficient: smallest eigenvalue of A A^T is {min_eigenvalue:e}")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("evaluator `{evaluator}` failed: {detail}")]
    Evaluator {
        evaluator: &'static str,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

pub(crate) fn check_finite(context: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { context, index }),
        None => Ok(()),
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be strictly positive and finite",
        })
    }
}
