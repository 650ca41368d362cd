use thiserror::Error;

use crate::rng::StreamId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} sites, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("step budget of {steps} exhausted at t = {time}")]
    StepLimit { time: f64, steps: u64 },

    #[error("trajectory {stream} failed: {source}")]
    Trajectory {
        stream: StreamId,
        #[source]
        source: Box<Error>,
    },

    #[error("Krylov propagation did not converge to {tol:e} (dt = {dt}, reached {reached:e})")]
    KrylovNonConvergence { tol: f64, dt: f64, reached: f64 },

    #[error("invalid cut {cut} for a chain of {n_sites} sites")]
    InvalidCut { cut: usize, n_sites: usize },

    #[error("basis does not match model: {0}")]
    BasisMismatch(String),

    #[error("series mismatch: {0}")]
    SeriesMismatch(String),

    #[error("CVRMSD undefined: reference series has zero mean")]
    UndefinedCvrmsd,

    #[error("empty pair selection")]
    EmptyPairSet,

    #[error("invalid ensemble request: {0}")]
    InvalidEnsemble(String),
}
