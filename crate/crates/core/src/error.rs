use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: duplicate {kind} key `{key}`")]
    DuplicateKey {
        path: PathBuf,
        kind: &'static str,
        key: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("date {date} is after the reference date {reference}")]
    DateAfterReference {
        date: chrono::NaiveDate,
        reference: chrono::NaiveDate,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class {class} has {count} members, fewer than k = {k}")]
    TooFewClassMembers { class: bool, count: usize, k: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("pooled covariance is singular even after ridge {ridge:e}")]
    SingularCovariance { ridge: f64 },

    #[error("unknown feature set `{0}`")]
    UnknownFeatureSet(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step `{step}` failed: {inner}")]
    Step { step: &'static str, inner: Box<Error> },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    /// Whether the error stems from bad input or configuration (including a
    /// missing input file) rather than an environment or internal failure.
    /// The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Step { inner, .. } => inner.is_validation(),
            Error::Io { cause, .. } => cause.kind() == std::io::ErrorKind::NotFound,
            Error::Json(_) | Error::Csv(_) => false,
            _ => true,
        }
    }
}
