use thiserror::Error;

/// Errors produced by library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid granularity {eta}: {reason}")]
    InvalidGranularity { eta: f64, reason: String },
    #[error("cannot normalize an all-zero vector")]
    ZeroVector,
    #[error("map parse error at line {line}: {msg}")]
    MapParse { line: usize, msg: String },
    #[error("map has no agent spawn")]
    MissingSpawn,
    #[error("collectible at ({row}, {col}) is unreachable from spawn")]
    UnreachableCollectible { row: usize, col: usize },
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no trained table for weight {0:?}")]
    UntrainedWeight(Vec<f64>),
    #[error("representation mismatch: model expects {expected}, feature is {got}")]
    RepresentationMismatch { expected: String, got: String },
    #[error("multiplicative weight update requires strictly positive weights")]
    NonPositiveWeight,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("replay minimum fill {min} must be below capacity {capacity}")]
    ReplayMinExceedsCapacity { min: usize, capacity: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
