//! Error types shared across the crate.

use thiserror::Error;

/// Errors from configuration and excitation handling in Fock space.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid system spec: {0}")]
    InvalidSpec(String),
    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),
    #[error("sector holds {needed} configurations, exceeding the budget of {budget}")]
    SectorTooLarge { needed: u128, budget: usize },
}

/// Errors from FCIDUMP parsing and integral handling.
#[derive(Error, Debug)]
pub enum FcidumpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed namelist: {0}")]
    Namelist(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors from checkpoint serialization.
#[derive(Error, Debug)]
pub enum CheckpointError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("length mismatch: expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("inconsistent shape: {0}")]
    Shape(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors from amplitude evaluation and sampling.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum SampleError {
    #[error("amplitude is exactly zero on the sampled configuration")]
    ZeroAmplitude,
    #[error("singular orbital matrix: log-derivatives unavailable")]
    SingularMatrix,
    #[error("no legal move available in this sector")]
    NoLegalMove,
    #[error("could not draw a valid sample after {0} attempts")]
    Exhausted(usize),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

/// Errors from the optimizer.
#[derive(Error, Debug)]
pub enum SrError {
    #[error("linear solve failed; if the matrix is rank deficient, use a diagonal shift lambda > 0")]
    SolveFailed { rank_deficient: bool },
    #[error("dense solve for {0} parameters is too large; use the kernel variant")]
    TooManyParams(usize),
    #[error("non-finite energy at iteration {iter}: {detail}")]
    NonFiniteEnergy { iter: usize, detail: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Errors from exact diagonalization.
#[derive(Error, Debug)]
pub enum EdError {
    #[error("sector dimension {dim} exceeds the limit {limit} for this solver")]
    TooLarge { dim: usize, limit: usize },
    #[error("Lanczos did not converge: residual {residual:.3e} after {iters} iterations")]
    NotConverged { residual: f64, iters: usize },
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Errors from curve fitting.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("fit did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("fit is unbound (De <= 0)")]
    Unbound,
}

/// Top-level error for library consumers.
#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Fcidump(#[from] FcidumpError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Sr(#[from] SrError),
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
