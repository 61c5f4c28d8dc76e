//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Failure modes distinguished by the pipeline.
///
/// `Validation` and `Usage` indicate bad inputs and are always detected
/// before any numerics run; the remaining variants are raised mid-computation
/// and carry enough context to locate the offending quantity.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed a range or consistency check.
    #[error("invalid {field}: {message}")]
    Validation {
        field: &'static str,
        message: String,
    },

    /// Two sphere supports overlap where the kernel requires separation.
    #[error("overlap violation: {0}")]
    Overlap(String),

    /// An operation was called outside its documented domain.
    #[error("usage error: {0}")]
    Usage(String),

    /// An integrand or matrix element evaluated to NaN or infinity.
    #[error("non-finite value at {location}: {detail}")]
    NonFinite { location: String, detail: String },

    /// A coefficient matrix with zero norm cannot define a state.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// Supplied kernels violate a structural requirement (hermiticity,
    /// reality of the potential).
    #[error("inconsistent input: {0}")]
    InputConsistency(String),

    /// The truncated Fock basis is too small to hold the evolved state.
    #[error("truncation too small: {0}")]
    Truncation(String),

    /// Time evolution lost more norm than the accuracy budget allows.
    #[error("evolution accuracy: {0}")]
    Evolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
