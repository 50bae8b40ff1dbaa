use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Invalid problem, algorithm or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// The problem produced a non-finite objective value.
    #[error("evaluation of member {index} produced a non-finite objective vector {values:?}")]
    Evaluation { index: usize, values: Vec<f64> },
    #[error("training error: {0}")]
    Training(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
