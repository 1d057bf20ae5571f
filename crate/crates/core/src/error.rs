use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet order {0} exceeds the maximum supported order")]
    OrderTooHigh(usize),

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("jet of order {got} is insufficient, need order {needed}")]
    InsufficientOrder { needed: usize, got: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("division by a jet with zero value entry")]
    ZeroDivisor,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {x} lies outside the domain of `{name}`")]
    OutOfDomain { name: String, x: f64 },

    #[error("domain too small: no admissible point with margin {margin}")]
    DomainTooSmall { margin: f64 },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank-deficient design matrix (rank {rank} of {cols})")]
    RankDeficient { rank: usize, cols: usize },

    #[error("operator not in the characterized family at x = {x}: {reason}")]
    NotInFamily { x: f64, reason: String },

    #[error("no violation found in {trials} trials")]
    NoViolationFound { trials: usize },

    #[error("unknown name `{0}`")]
    UnknownName(String),
}
