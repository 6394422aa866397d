//! Command-line front end: loads contingency tables, runs the assumption
//! ladder over a grid of events and evidence levels, and emits a JSON
//! attribution report or a plain-text table.

pub mod analysis;
pub mod config;
pub mod table;
pub mod verify;

pub use analysis::{analyze, load, run_analysis, AttributionReport, Cell, CellOutcome};
pub use config::{AssumeArg, Config, EventTemplate, Mode, Route};
pub use table::render_table;
pub use verify::{verify, VerifyOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] ordinal_attribution::Error),
    #[error("verification failed for {0} cell(s)")]
    VerificationFailed(usize),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Internal(_) => 2,
            CliError::VerificationFailed(_) => 3,
        }
    }
}
