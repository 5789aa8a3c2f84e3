use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("non-finite value produced by {op}")]
    NumericOverflow { op: &'static str },
    #[error("unknown class id {0}")]
    Lookup(usize),
    #[error("degenerate embedding: zero vector before normalization")]
    DegenerateEmbedding,
    #[error("dimensionality reduction: {0}")]
    Reduction(String),
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("task sampling failed for cluster {cluster}: {reason}")]
    Sampling { cluster: usize, reason: String },
    #[error("training diverged at step {step}: non-finite loss")]
    Divergence { step: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
