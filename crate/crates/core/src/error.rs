use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid perturbation model: {0}")]
    InvalidPerturbation(String),

    #[error("{0} requires a finite perturbation grid (continuous mode given)")]
    ContinuousNotSupported(&'static str),

    #[error("invalid hypothesis class: {0}")]
    InvalidHypothesisClass(String),

    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("{what} needs {needed} cells, exceeding the configured cap of {cap}")]
    SizeCap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("LP solver failed: {0}")]
    Solver(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        field,
        reason: reason.into(),
    }
}
