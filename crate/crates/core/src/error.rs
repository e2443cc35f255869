use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument outside the function's domain, e.g. `phi(0)`.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sequence index past the end of a finite sequence.
    #[error("index {index} is out of range for sequence {sequence} (available terms: {available})")]
    Range {
        sequence: String,
        index: u64,
        available: u64,
    },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// A computation that would exceed its memory or size budget.
    #[error("resource limit exceeded: attempted {attempted}, budget {budget}")]
    Resource { attempted: u64, budget: u64 },

    #[error("bound derivation failed: {0}")]
    Derivation(String),

    /// Two independent computations disagree. Always a bug.
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),
}
