use thiserror::Error;

/// Errors shared across the crate. Falsified mathematical identities are
/// *not* errors — operations that check identities return `bool` or a
/// report; `CoreError` is for unusable inputs and resource guards.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("unsupported parameter {name}={value} (allowed {allowed})")]
    OutOfRange {
        name: &'static str,
        value: i64,
        allowed: &'static str,
    },

    #[error("ring mismatch: expected ({expected}), got ({got})")]
    RingMismatch { expected: String, got: String },

    #[error("insufficient working precision: {0}")]
    Precision(String),

    #[error("result not stabilized at cutoff {cutoff}: {what}")]
    NotStabilized { cutoff: usize, what: String },

    #[error("inconclusive at truncation level {j}: {what}")]
    Inconclusive { j: u32, what: String },

    #[error("blow-up center is not a smooth point ({0})")]
    CenterNotSmooth(String),

    #[error("blow-up center is not rational over the residue field ({0})")]
    CenterNotRational(String),

    #[error("no solution: {0}")]
    NoSolution(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
