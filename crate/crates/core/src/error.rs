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

    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}: unsupported image format")]
    UnsupportedFormat { path: PathBuf },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    #[error("image is {width}x{height}, smaller than the 5x5 kernel footprint")]
    TooSmall { width: u32, height: u32 },

    #[error("image has zero total intensity; moments are undefined")]
    ZeroIntensity,

    #[error("histogram shape mismatch: {0:?} vs {1:?}")]
    HistogramShape((usize, usize), (usize, usize)),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mask is empty")]
    EmptyMask,

    #[error("insufficient {kind} pixels: need {needed}, have {available}")]
    InsufficientPixels {
        kind: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("unknown frame id `{0}`")]
    UnknownFrame(String),

    #[error("{0}")]
    Dataset(String),

    #[error("manifest schema error: {0}")]
    Schema(String),

    #[error("unsupported manifest version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
