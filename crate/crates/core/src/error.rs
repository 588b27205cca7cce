use thiserror::Error;

/// Errors raised by the wave model, the residual oracle and the fitter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A closed form was evaluated outside the region where it is real-valued
    /// or defined at all.
    #[error("{component}: {message}")]
    Domain {
        component: &'static str,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Caller broke an operation's contract (index out of range, grid too
    /// small, too few samples...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("normal equations are singular: {0}")]
    Singular(String),

    #[error("residual evaluation failed while perturbing parameter {index} ({name}): {source}")]
    Jacobian {
        index: usize,
        name: String,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(component: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            component,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
