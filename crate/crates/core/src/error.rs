use num_complex::Complex64;
use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is not negative definite (largest eigenvalue {0:e})")]
    NotNegativeDefinite(f64),
    #[error("matrix is not symmetric (relative deviation {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigen-solver did not converge: {0}")]
    NoConvergence(String),
    #[error("fractional power is ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("weights {0} and {1} are not distinct")]
    DuplicateOmega(f64, f64),
    #[error("invalid operator weights: {0}")]
    InvalidOmega(String),
    #[error("argument {0} is outside the domain y < 0")]
    DomainError(f64),
    #[error("pole of the operator hit at z = {0}")]
    PoleHit(Complex64),
    #[error("non-finite state at stage {stage} of the step starting at t = {t}")]
    NonFiniteState { stage: usize, t: f64 },
    #[error("unsupported order {0}")]
    UnsupportedOrder(usize),
    #[error("no admissible boundary root at theta = {0}")]
    RootFindingFailure(f64),
    #[error("generalized eigenvalue {0} lies left of -1")]
    InvalidMu(f64),
    #[error("splitting matrix A is singular")]
    SingularA,
    #[error("A and B are not simultaneously diagonalizable (commutator {0:e})")]
    NotSimultaneouslyDiagonalizable(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
