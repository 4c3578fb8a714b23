use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported plan F({m}, {r}): only (2, 3) and (4, 3) are available")]
    UnsupportedPlan { m: usize, r: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity error: {used} channels exceed the budget of {max}")]
    Capacity { used: usize, max: usize },

    #[error("normalization contract violated: |w| = {0} > 1")]
    Normalization(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch} (last stable epoch: {last_stable:?})")]
    Divergence {
        epoch: usize,
        last_stable: Option<usize>,
    },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
