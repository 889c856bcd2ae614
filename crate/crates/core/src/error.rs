use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate leg label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown leg label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (defect {defect:e} exceeds tolerance {tolerance:e})")]
    NotHermitian { defect: f64, tolerance: f64 },
    #[error("not a density operator: {0}")]
    InvalidState(String),
    #[error("invalid process tensor: {0}")]
    InvalidProcess(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("control comb does not chain with the process: {0}")]
    Chaining(String),
    #[error("unknown time `{0}`")]
    UnknownTime(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("slot count mismatch: {0} vs {1}")]
    SlotMismatch(usize, usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
