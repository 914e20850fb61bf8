use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can surface.
///
/// Variants are grouped by [`ErrorKind`] so front ends can map them onto
/// stable exit codes without matching on individual variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no price band contains {price}")]
    BandAssignment { price: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("persistence error: {0}")]
    Persistence(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad rule files, band specs, policies, schemas, model files.
    Configuration,
    /// Data that violates an operation's preconditions.
    DataContract,
    /// Solver or arithmetic breakdown.
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Config(_) | Error::Schema(_) | Error::Persistence(_) => ErrorKind::Configuration,
            Error::Parse { .. } | Error::Contract(_) | Error::BandAssignment { .. } => {
                ErrorKind::DataContract
            }
            Error::Numeric(_) => ErrorKind::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
