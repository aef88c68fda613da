use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("scalar field mismatch between {0}")]
    FieldMismatch(String),
    #[error("support functionals are undefined at the zero vector")]
    ZeroVector,
    #[error("operation requires a polyhedral norm (l1, l-infinity or polyhedral)")]
    NotPolyhedral,
    #[error("operation requires real scalars")]
    ComplexUnsupported,
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("operation requires Euclidean (l2) domain and codomain")]
    NotEuclidean,
    #[error("operator must have norm 1 (found {norm})")]
    NotNormalized { norm: f64 },
    #[error("operator must be square with equal domain and codomain")]
    NonSquare,
    #[error("operator is not a surjective isometry: {0}")]
    NotIsometry(String),
    #[error("seminorm-degenerate input: {0}")]
    Degenerate(String),
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
