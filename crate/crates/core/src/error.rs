use thiserror::Error;

pub type Result<T> = std::result::Result<T, PosIdError>;

#[derive(Debug, Error)]
pub enum PosIdError {
    /// Invalid hyperparameters or violated modelling assumptions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent data.
    #[error("data error: {0}")]
    Data(String),

    /// An operation was evaluated outside its domain (e.g. before the input support).
    #[error("domain error: {0}")]
    Domain(String),

    /// The QP solver did not certify optimality.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PosIdError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        PosIdError::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        PosIdError::Data(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        PosIdError::Domain(msg.into())
    }
}
