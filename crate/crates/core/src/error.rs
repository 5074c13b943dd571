use thiserror::Error;

use crate::model::FeatureSet;

/// Errors produced anywhere in the estimation engine and its harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("decode error in `{chunk}` chunk: {reason}")]
    Decode { chunk: String, reason: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("window of {len} samples is shorter than one frame span of {span} samples")]
    EmptyWindow { len: usize, span: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("frame grid mismatch: {left} vs {right} frames")]
    GridMismatch { left: usize, right: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected} inputs, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("feature-set mismatch: model was trained on `{model}`, pipeline expects `{expected}`")]
    FeatureSetMismatch {
        model: FeatureSet,
        expected: FeatureSet,
    },

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("audio source failed: {0}")]
    Source(String),
}

pub type Result<T> = std::result::Result<T, Error>;
