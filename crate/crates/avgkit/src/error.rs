use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or subspace dimensions are incompatible with the operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar argument lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A mathematical precondition (nonexpansiveness, symmetry, PSD) fails.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// No finite answer exists (e.g. ker B not contained in ker A).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A numeric invariant was violated during evaluation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
