use thiserror::Error;

/// Errors raised by the numerical routines and the command line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {value} is outside the evaluation domain: {reason}")]
    Domain { value: f64, reason: &'static str },

    #[error("series terms or sum left the f64 range after {terms} terms")]
    Overflow { terms: usize },

    #[error("cancellation needs {bits} bits of working precision (limit {limit})")]
    PrecisionBudget { bits: u32, limit: u32 },

    #[error("operator `{op}` cannot act on {what}")]
    UnsupportedPairing { op: &'static str, what: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("density mass {mass:e} on the last panel below U = {upper} exceeds the tail tolerance")]
    TailTooLarge { upper: f64, mass: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the caller's arguments.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidParameter { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
