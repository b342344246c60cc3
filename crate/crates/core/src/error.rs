use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants follow the failure classes the command-line front-end maps
/// onto exit codes: structural and validation problems are the caller's
/// fault, resource errors mean the request is too large for dense methods.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed circuit, mismatched dimensions, missing parameters.
    #[error("structural error: {0}")]
    Structural(String),
    /// Input values violate a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// Problem too large for the dense representation.
    #[error("resource error: {0}")]
    Resource(String),
    /// Optimizer produced a non-finite value.
    #[error("optimization error at step {step}: {message}")]
    Optimization { step: usize, message: String },
    /// An error annotated with the grid point it occurred at.
    #[error("at grid point (kappa={kappa}, h={h}): {source}")]
    AtGridPoint {
        kappa: f64,
        h: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Strips grid-point annotations and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
