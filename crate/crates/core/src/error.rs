use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("LED {led} and PD {pd} are coincident")]
    CoincidentPositions { led: usize, pd: usize },

    #[error("matrix is rank deficient (condition number {condition:e} exceeds {limit:e})")]
    RankDeficient { condition: f64, limit: f64 },

    #[error("vector is not a legal transmit vector: {0}")]
    IllegalTxVector(String),

    #[error("training diverged at epoch {epoch}: non-finite {what}")]
    Divergence { epoch: usize, what: &'static str },

    #[error("target BER {target:e} is not bracketed by the uncensored points of the curve")]
    Unbracketed { target: f64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
