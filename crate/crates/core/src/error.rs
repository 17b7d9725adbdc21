use thiserror::Error;

/// Errors raised by every estimator and pipeline in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: need at least {needed} usable samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(
        "KL divergence undefined: q[{index}] = 0 where p[{index}] > 0; \
         smooth q explicitly or use the Jensen-Shannon divergence instead"
    )]
    DisjointSupport { index: usize },

    #[error("system has {n} nodes, above the exact-computation cap of {cap}")]
    SystemTooLarge { n: usize, cap: usize },

    #[error("manifest is missing required field `{0}`")]
    MissingField(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for the errors that signal a malformed request rather than an
    /// incomplete report.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::MissingField(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
