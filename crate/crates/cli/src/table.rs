//! Plain-text grid: one block per evidence level, one row per assumption
//! set, one column per event family. Values are rounded to two decimals
//! here and nowhere else.

use std::fmt::Write;

use ordinal_attribution::AssumptionSet;

use crate::analysis::{AttributionReport, CellOutcome};
use crate::config::Mode;

fn row_label(a: AssumptionSet) -> &'static str {
    match a {
        AssumptionSet::MonotonicIncrement => "point (incremental)",
        AssumptionSet::MarginalOnly => "bounds (marginal)",
        AssumptionSet::Monotonicity => "bounds (monotone)",
    }
}

fn render_cell(outcome: &CellOutcome) -> String {
    match outcome {
        CellOutcome::Point { value, .. } => format!("{value:.2}"),
        CellOutcome::Bounds {
            lower,
            upper,
            contradictory,
            ..
        } => {
            let mark = if *contradictory { "!" } else { "" };
            format!("[{lower:.2}, {upper:.2}]{mark}")
        }
        CellOutcome::Refused { .. } => "refused".into(),
    }
}

pub fn render_table(report: &AttributionReport) -> String {
    let quantity = match report.mode {
        Mode::Pn => "PN",
        Mode::Pc => "PC",
    };
    let mut header = vec![String::new(), format!("{quantity}(event, y)")];
    header.extend(report.families.iter().cloned());
    let mut rows = vec![header];
    for &y in &report.evidence {
        for (i, &a) in report.assumptions.iter().enumerate() {
            let mut row = vec![
                if i == 0 {
                    format!("y={y}")
                } else {
                    String::new()
                },
                row_label(a).to_string(),
            ];
            row.extend(report.families.iter().map(|f| {
                report
                    .cell(f, y, a)
                    .map(|c| render_cell(&c.outcome))
                    .unwrap_or_default()
            }));
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if report.cells.iter().any(|c| {
        matches!(
            c.outcome,
            CellOutcome::Bounds {
                contradictory: true,
                ..
            }
        )
    }) {
        out.push_str("! lower bound exceeds upper bound: the data contradict monotonicity\n");
    }
    if !report.falsification.pass {
        out.push_str("refused: the incremental-effect assumption is falsified by the data\n");
    }
    out
}
