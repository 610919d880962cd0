use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate at point {point}, axis {axis}")]
    NonFiniteInput { point: usize, axis: usize },

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("quantile {0} outside (0, 1]")]
    InvalidQuantile(f64),

    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error(
        "simplex budget of {budget} exceeded at dimension {dim}; reduce eps_max, subsample, or lower max_dim"
    )]
    SimplexBudgetExceeded { budget: usize, dim: usize },

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("brute-force homology limited to {limit} points, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("loss diverged (non-finite) in epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },

    #[error("truncated file: {0}")]
    TruncatedFile(String),

    #[error("count mismatch: {0}")]
    CountMismatch(String),

    #[error("label {label} out of range (max {max})")]
    BadLabel { label: usize, max: usize },

    #[error("pruning would remove every filter of layer {layer}")]
    WouldEmptyLayer { layer: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
