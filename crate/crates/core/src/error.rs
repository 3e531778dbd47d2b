use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
///
/// `kind()` gives a stable, machine-parsable tag used by the CLI and the C API.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),

    #[error("configuration rejected: {0}")]
    RejectedConfiguration(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("fingerprint mismatch: expected {expected}, found {found}")]
    Fingerprint { expected: String, found: String },

    #[error("dataset generation aborted: {0}")]
    GenerationAborted(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    NonFiniteLoss { epoch: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::RejectedConfiguration(_) => "rejected_configuration",
            Error::DegenerateDataset(_) => "degenerate_dataset",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Fingerprint { .. } => "fingerprint",
            Error::GenerationAborted(_) => "generation_aborted",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
