use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed image: {0}")]
    Malformed(String),

    #[error("png error: {0}")]
    Png(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("no seed candidates")]
    NoCandidates,

    #[error("K = {k} exceeds the number of {what} ({available})")]
    TooManyClusters {
        k: usize,
        available: usize,
        what: &'static str,
    },

    #[error("seed {index} at ({x}, {y}) fails the acceptance rule")]
    SeedRejected { index: usize, x: usize, y: usize },

    #[error("duplicate seed at ({x}, {y})")]
    DuplicateSeed { x: usize, y: usize },

    #[error("invalid blob spec: {0}")]
    InvalidBlob(String),

    #[error("no ROI found")]
    NoRoi,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
