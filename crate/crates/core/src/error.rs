use std::path::PathBuf;

use thiserror::Error;

use crate::ordinal::AssumptionSet;

/// Errors raised by the attribution library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("level {level} out of range for {levels} outcome levels")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("level count mismatch: expected {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("conditioning event Y1 = {level} has zero probability; the conditional is undefined")]
    ZeroEvidence { level: usize },

    #[error("treatment arm z={arm} is empty{context}")]
    EmptyArm { arm: u8, context: String },

    #[error(
        "data sources are incompatible: identified control probability at level {level} is {value}"
    )]
    IncompatibleSources { level: usize, value: f64 },

    #[error("wrong data source: {0}")]
    SourceMismatch(String),

    #[error(
        "incremental-effect assumption falsified at k={k}: gap {gap} outside [{lower}, {upper}] \
         or diagonal mass {diagonal} negative"
    )]
    Falsified {
        k: usize,
        lower: f64,
        gap: f64,
        upper: f64,
        diagonal: f64,
    },

    #[error("event {0} has no closed-form bound under monotonicity; use the linear program")]
    UnsupportedEvent(String),

    #[error("expected {expected} conditioning, found {found}")]
    ConditioningMismatch { expected: String, found: String },

    #[error("margin sums differ: rows sum to {rows}, columns sum to {cols}")]
    MarginMismatch { rows: f64, cols: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear program is infeasible under {0}")]
    Infeasible(AssumptionSet),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("optimality certificate rejected: {0}")]
    Certificate(String),

    #[error("witness construction failed: {0}")]
    Construction(String),

    #[error("sampler could not produce feasible matrices: {0}")]
    Sampling(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
