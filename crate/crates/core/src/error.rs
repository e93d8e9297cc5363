use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a formula or model.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The first-step equations of a hitting-time chain have no unique solution.
    #[error("singular hitting-time system: {0}")]
    Singular(String),

    #[error("schema mismatch in {path}: expected `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("malformed record in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
