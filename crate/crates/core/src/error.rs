use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot parse matrix: {0}")]
    Parse(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not invertible over the integers (det = {det})")]
    NonInvertible { det: BigInt },
    #[error("matrix is not unimodular (det = {det})")]
    NotUnimodular { det: BigInt },
    #[error("no power up to {cap} is the identity, but the matrix has finite order; raise the order cap")]
    OrderCapTooSmall { cap: u64 },
    #[error("{m} and {n} are not coprime")]
    NotCoprime { m: u64, n: u64 },
    #[error("monodromy has infinite order")]
    InfiniteOrder,
    #[error("periods {m} and {n} are not coprime")]
    PeriodsNotCoprime { m: u64, n: u64 },
    #[error("interval [{lo}, {hi}] is not strictly inside ({min}, {max})")]
    BadInterval {
        lo: f64,
        hi: f64,
        min: f64,
        max: f64,
    },
    #[error("target matrix has non-positive determinant {det}")]
    NegativeDeterminant { det: f64 },
    #[error("rotation logarithm failed: {0}")]
    LogFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency check failed: {0}")]
    CheckFailed(String),
}

impl Error {
    /// Stable variant name, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "Parse",
            Error::InvalidMatrix(_) => "InvalidMatrix",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonInvertible { .. } => "NonInvertible",
            Error::NotUnimodular { .. } => "NotUnimodular",
            Error::OrderCapTooSmall { .. } => "OrderCapTooSmall",
            Error::NotCoprime { .. } => "NotCoprime",
            Error::InfiniteOrder => "InfiniteOrder",
            Error::PeriodsNotCoprime { .. } => "PeriodsNotCoprime",
            Error::BadInterval { .. } => "BadInterval",
            Error::NegativeDeterminant { .. } => "NegativeDeterminant",
            Error::LogFailure(_) => "LogFailure",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::CheckFailed(_) => "CheckFailed",
        }
    }
}
