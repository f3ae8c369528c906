use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("unsupported pixel format in {path}: {format}")]
    UnsupportedFormat { path: PathBuf, format: String },
    #[error("image has zero size")]
    EmptyImage,
    #[error("invalid image buffer: {0}")]
    InvalidBuffer(String),
    #[error("image too small for {requested} scales (maximum feasible: {max_feasible})")]
    TooManyScales {
        requested: usize,
        max_feasible: usize,
    },
    #[error("patch side {side} exceeds image dimensions {width}x{height}")]
    PatchTooLarge {
        side: usize,
        width: usize,
        height: usize,
    },
    #[error("patch origin ({x}, {y}) out of bounds")]
    OriginOutOfBounds { x: usize, y: usize },
    #[error("plane {width}x{height} is smaller than kernel of radius {radius}")]
    PlaneTooSmall {
        width: usize,
        height: usize,
        radius: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("only {usable} usable patches for a dictionary of {requested} atoms")]
    NotEnoughPatches { usable: usize, requested: usize },
    #[error("dictionary atom {0} is not unit-norm")]
    NotNormalized(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("zero variance input")]
    ZeroVariance,
    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("unknown frame id in ground truth: {0}")]
    UnknownFrame(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
