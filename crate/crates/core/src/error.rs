use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A theta monomial with an odd exponent reached the closed-form integral.
    /// Surviving monomials always have even exponents, so this means the
    /// frequency filter upstream is broken.
    #[error("parity violation: monomial c^{c_exp} s^{s_exp} has an odd exponent")]
    ParityViolation { c_exp: usize, s_exp: usize },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("{field}: {message}")]
    Parse { field: String, message: String },
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
