//! Oracle verification of every interval in a report.

use std::fs;
use std::path::Path;

use ordinal_attribution::oracle::{verify_bounds, VerificationReport};
use ordinal_attribution::{make_event, BoundsResult, Error, EventKind, Method};
use serde::Serialize;

use crate::analysis::{run_analysis, AttributionReport, CellOutcome};
use crate::config::Config;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CellVerification {
    pub family: String,
    pub event: String,
    pub evidence: usize,
    pub assumptions: ordinal_attribution::AssumptionSet,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<VerificationReport>,
    /// Why the cell was not sampled, e.g. an empty feasible set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub analysis: AttributionReport,
    pub samples: usize,
    pub seed: u64,
    pub widen: f64,
    pub passed: bool,
    pub cells: Vec<CellVerification>,
}

/// Runs the analysis, then samples the feasible set of every cell and
/// measures containment and sharpness of its interval.
pub fn verify(config: &Config) -> Result<VerifyOutput, CliError> {
    if config.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let analysis = run_analysis(config)?;
    verify_report(analysis, config)
}

pub fn verify_report(
    analysis: AttributionReport,
    config: &Config,
) -> Result<VerifyOutput, CliError> {
    let pair = analysis.pair()?;
    let levels = pair.levels();
    let mut cells = Vec::new();
    for cell in &analysis.cells {
        let Some((lower, upper)) = cell.outcome.interval() else {
            continue;
        };
        let method = match cell.outcome {
            CellOutcome::Bounds { .. } => Method::ClosedForm,
            _ => Method::LinearProgram,
        };
        let bounds = BoundsResult {
            lower: lower - config.widen,
            upper: upper + config.widen,
            assumptions: cell.assumptions,
            method,
            witnesses: None,
        };
        let event = make_event(&EventKind::Custom(cell.coeffs.clone()), levels)?;
        let mut entry = CellVerification {
            family: cell.family.clone(),
            event: cell.event.clone(),
            evidence: cell.evidence,
            assumptions: cell.assumptions,
            lower: bounds.lower,
            upper: bounds.upper,
            passed: true,
            report: None,
            skipped: None,
        };
        match verify_bounds(
            &pair,
            &event,
            cell.evidence,
            cell.assumptions,
            &bounds,
            config.samples,
            config.seed,
        ) {
            Ok(report) => {
                entry.passed = report.passed();
                entry.report = Some(report);
            }
            // Data that contradict the assumption leave nothing to sample.
            Err(e @ (Error::Sampling(_) | Error::Infeasible(_)))
                if bounds.is_contradictory() || !analysis.falsification.pass =>
            {
                entry.skipped = Some(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
        cells.push(entry);
    }
    Ok(VerifyOutput {
        passed: cells.iter().all(|c| c.passed),
        analysis,
        samples: config.samples,
        seed: config.seed,
        widen: config.widen,
        cells,
    })
}

impl VerifyOutput {
    /// Writes one CSV of sampled values per verified cell into `dir`.
    pub fn write_samples(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Data(Error::Io {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })
        })?;
        for (i, cell) in self.cells.iter().enumerate() {
            if let Some(report) = &cell.report {
                let event = cell
                    .event
                    .replace("!=", "_ne_")
                    .replace('=', "_eq_")
                    .replace('<', "_lt_")
                    .replace(" in ", "_in_");
                let event: String = event
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
                    .collect();
                let name = format!(
                    "{i:03}_{event}_y{}_{}",
                    cell.evidence,
                    cell.assumptions.tag()
                );
                report.write_samples_csv(&dir.join(format!("{name}.csv")))?;
            }
        }
        Ok(())
    }
}
