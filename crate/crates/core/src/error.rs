use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QicError {
    #[error("dimension {requested} exceeds the configured cap {cap}")]
    DimensionCap { requested: u128, cap: u128 },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("trace {trace} is not 1")]
    Normalization { trace: f64 },
    #[error("eigenvalue {value:e} is below the positivity tolerance")]
    Positivity { value: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("protocol is invalid: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("atom cap exceeded: {atoms} atoms (cap {cap})")]
    AtomCap { atoms: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, QicError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(QicError::Argument(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(QicError::Contract(msg.into()))
}
