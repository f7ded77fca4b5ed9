use thiserror::Error;

use crate::equivalence::Hypothesis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitianInput { residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("map is not completely positive")]
    NotCp,

    #[error("map is zero")]
    ZeroMap,

    #[error("second map is not dominated by the first")]
    NotDominated,

    #[error("pencil input shares a nonzero common kernel vector")]
    InputNotReduced,

    #[error("instance too large for the grid oracle: {0}")]
    TooLarge(String),

    #[error("partial block matrix admits no positive completion")]
    NotCompletable,

    #[error("partial map does not take values in M·R: {0}")]
    MalformedPartialMap(String),

    #[error("seed map is not a CP completion of the partial map")]
    SeedNotACompletion,

    #[error("R is not an orthogonal projection")]
    RNotProjection,

    #[error("invalid witness: {0}")]
    WitnessInvalid(String),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(Hypothesis),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("internal numerical failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
