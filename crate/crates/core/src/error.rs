use thiserror::Error;

/// Errors raised by the library.
///
/// The variants split into two groups that the CLI maps onto different
/// exit codes: input problems (`Config`, `Usage`, `Io`, `Json`) and
/// mathematical precondition failures (everything else).
#[derive(Debug, Error)]
pub enum Error {
    /// Unknown family, invalid parameters, malformed tables.
    #[error("configuration error: {0}")]
    Config(String),

    /// A call that is not meaningful for the given arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The distribution is degenerate where a non-degenerate one is required.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The quantile function fails the integrability conditions of H*.
    #[error("not in H*: {reason}")]
    NotInHStar {
        reason: String,
        failing_order: Option<usize>,
    },

    /// A quadrature or series did not reach the requested tolerance.
    #[error("no convergence in {what}: {detail}")]
    NonConvergence { what: String, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than by the
    /// mathematics of the request.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Usage(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_)
        )
    }

    pub(crate) fn non_convergence(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NonConvergence {
            what: what.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
