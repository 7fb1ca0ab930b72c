use thiserror::Error;

/// Errors raised by measure, matrix, transport and dual constructions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("total mass must be positive, found {0}")]
    ZeroMass(f64),

    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("measure has no atoms")]
    Empty,

    #[error("non-finite value in input")]
    NonFinite,

    #[error("direction has norm {0}, expected 1")]
    NotUnit(f64),

    #[error("basis is not orthonormal (max Gram deviation {0})")]
    NotOrthonormal(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue} < -{tol})")]
    NotPsd { eigenvalue: f64, tol: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {0})")]
    NotDefinite(f64),

    #[error("matrix is singular")]
    Singular,

    #[error("measure is not a 2-frame (smallest frame bound {0})")]
    NotAFrame(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("transport problem too large: {rows} x {cols} exceeds {limit} cells")]
    SizeLimit { rows: usize, cols: usize, limit: usize },

    #[error("atom {index} is off the unit sphere (norm {norm})")]
    OffSphere { index: usize, norm: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid dual coupling: {0}")]
    InvalidDual(String),
}

pub type Result<T> = std::result::Result<T, Error>;
