use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs with inconsistent shapes or otherwise unusable values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested evaluation is outside what the chosen method supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("normal equations could not be factorized (condition estimate {condition:.3e})")]
    Factorization { condition: f64 },

    #[error("iteration diverged at step {step}: residual {residual:.6e} exceeds 10x initial {initial:.6e}")]
    Divergence {
        step: usize,
        residual: f64,
        initial: f64,
    },

    #[error("unknown {kind} `{name}`; registered: {available}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
