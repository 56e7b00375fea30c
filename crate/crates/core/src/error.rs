use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter block violates one of its invariants; `field` names the offending key.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// The Volterra residual did not change sign inside the search bracket.
    #[error("no sign change for {which} at node {node} (t = {t}); residual scan: {scan:?}")]
    Bracket {
        which: &'static str,
        node: usize,
        t: f64,
        scan: Vec<(f64, f64)>,
    },

    #[error("{what} did not converge at step {step} after {iters} iterations")]
    Convergence {
        what: &'static str,
        step: usize,
        iters: usize,
    },

    /// Curves were used before the nodes a computation depends on were filled.
    #[error("state error: {0}")]
    State(String),

    #[error("extraction error: {0}")]
    Extraction(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Validation { .. } => "validation",
            Error::Bracket { .. } => "bracket",
            Error::Convergence { .. } => "convergence",
            Error::State(_) => "state",
            Error::Extraction(_) => "extraction",
            Error::Consistency(_) => "consistency",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
