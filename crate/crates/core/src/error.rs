use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Photon numbers or mode counts of the operands do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A size guard (enumeration count, matrix order, integer range) was exceeded.
    #[error("resource guard: {0}")]
    Guard(String),

    /// A result failed an internal consistency check, such as a large
    /// imaginary residue in a quantity that must be real.
    #[error("numerical consistency: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn guard(msg: impl Into<String>) -> Self {
        Error::Guard(msg.into())
    }
}
