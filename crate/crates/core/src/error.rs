use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty probability vector")]
    Empty,

    #[error("entry {index} is {value}, negative beyond tolerance")]
    NegativeEntry { index: usize, value: f64 },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("entries sum to {sum}, not within {tol} of 1")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("channel entry ({row}, {col}) = {value} outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("channel row {row} sums to {sum}, not within {tol} of 1")]
    RowNotNormalized { row: usize, sum: f64, tol: f64 },

    /// Some index carries mass in the first argument but none in the second,
    /// so the divergence is infinite.
    #[error("absolute continuity violated at index {index}")]
    AbsoluteContinuityViolation { index: usize },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("max_iters must be positive")]
    MaxItersZero,

    #[error("initial distribution must have full support")]
    FullSupportRequired,

    #[error("grid search is limited to {max} input symbols, got {got}")]
    DimensionGuard { max: usize, got: usize },

    #[error("grid resolution {0} outside (0, 0.1]")]
    ResolutionOutOfRange(f64),

    #[error("rate fit needs at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("reference optimum unobtainable: {0}")]
    ReferenceUnobtainable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
