use alloc::string::String;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("field mismatch: F_{left} vs F_{right}")]
    FieldMismatch { left: u32, right: u32 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("the feasible sets have an empty intersection")]
    EmptyIntersection,
    #[error("round {round} is out of range 1..={rounds}")]
    RoundOutOfRange { round: usize, rounds: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("a slice of length {len} cannot be counted unambiguously in F_{q}")]
    CardinalityAmbiguity { len: usize, q: u32 },
    #[error("decoding failed: {0}")]
    Decode(String),
    #[error("enumeration needs more than {budget} randomness states")]
    BudgetExceeded { budget: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("count overflow")]
    Overflow,
}

pub type Result<T> = core::result::Result<T, Error>;
