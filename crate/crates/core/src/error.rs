use thiserror::Error;

/// Error type shared by the library modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be a power of two and at least 16, got {0}")]
    InvalidGridSize(usize),
    #[error("field contains non-finite samples")]
    NonFiniteField,
    #[error("energy must be nonnegative, got {0}")]
    NegativeEnergy(f64),
    #[error("blowup-time bound undefined: g0 = {g0} does not exceed sqrt(2)*K = {sqrt2_k}")]
    TstarUndefined { g0: f64, sqrt2_k: f64 },
    #[error("time step {required:e} fell below the floor {floor:e}")]
    DtUnderflow { required: f64, floor: f64 },
    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),
    #[error("need at least {needed} samples with g defined, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
