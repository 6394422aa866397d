//! Loading inputs and assembling the attribution report.

use std::path::{Path, PathBuf};

use ordinal_attribution::ingest::{
    counterfactual_margin_experimental, counterfactual_margin_unconfounded, randomized_margins,
    read_strata_json, read_table, ContingencyTable, IdentifiedMargins, Source,
};
use ordinal_attribution::lp::infeasibility_agrees_with_falsification;
use ordinal_attribution::pc::{pc_bounds, pc_falsification_check, pc_point};
use ordinal_attribution::{
    falsification_check, identify_joint, pn_bounds, pn_bounds_lp, pn_point, AssumptionSet,
    BoundsResult, Conditioning, Error, EventSpec, FalsificationReport, JointProbabilityMatrix,
    MarginalPair, Method,
};
use serde::Serialize;

use crate::config::{Config, Mode, Route};
use crate::CliError;

/// Agreement tolerance between a closed form and its LP cross-check.
const CROSS_CHECK_TOL: f64 = 1e-8;

pub const POINT_TAG: &str = "point: incremental-effect gap formula";
pub const FRECHET_TAG: &str = "bounds: marginal-only Frechet closed form";
pub const MONOTONE_TAG: &str = "bounds: monotone closed form";
pub const LP_TAG: &str = "bounds: exact linear program";
pub const REFUSAL_TAG: &str = "refused: incremental-effect falsification check";

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: PathBuf,
    /// `counts[z][y]`; for strata, one entry per stratum.
    pub counts: Vec<[Vec<u64>; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub strata_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Marginals {
    pub conditioning: Conditioning,
    pub treated: Vec<f64>,
    pub control: Vec<f64>,
    /// Levels of the identified control law that came out slightly negative
    /// and were set to zero.
    pub clamped_levels: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gaps {
    /// `delta` for conditional laws, `xi` for population laws.
    pub symbol: &'static str,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub provenance: &'static str,
    #[serde(flatten)]
    pub outcome: CrossCheckOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CrossCheckOutcome {
    Solved {
        lower: f64,
        upper: f64,
        agrees: bool,
    },
    Infeasible,
    Failed {
        message: String,
    },
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellOutcome {
    Point {
        value: f64,
        provenance: &'static str,
        cross_check: CrossCheck,
    },
    Bounds {
        lower: f64,
        upper: f64,
        provenance: &'static str,
        /// Lower above upper: the data contradict the assumption.
        contradictory: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        cross_check: Option<CrossCheck>,
        #[serde(skip_serializing_if = "Option::is_none")]
        witnesses: Option<(JointProbabilityMatrix, JointProbabilityMatrix)>,
    },
    Refused {
        provenance: &'static str,
        reason: String,
        /// Whether the linear program independently found no feasible joint.
        lp_infeasible: Option<bool>,
    },
}

impl CellOutcome {
    /// Interval shown for the cell; points are degenerate intervals.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match self {
            CellOutcome::Point { value, .. } => Some((*value, *value)),
            CellOutcome::Bounds { lower, upper, .. } => Some((*lower, *upper)),
            CellOutcome::Refused { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    /// Column heading of the event family.
    pub family: String,
    pub event: String,
    pub coeffs: Vec<u8>,
    pub evidence: usize,
    pub assumptions: AssumptionSet,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttributionReport {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<Route>,
    pub levels: usize,
    pub inputs: Vec<InputRecord>,
    pub marginals: Marginals,
    pub gaps: Gaps,
    pub falsification: FalsificationReport,
    /// The unique joint under the incremental assumption, when not falsified.
    pub identified_joint: Option<JointProbabilityMatrix>,
    pub families: Vec<String>,
    pub evidence: Vec<usize>,
    pub assumptions: Vec<AssumptionSet>,
    pub cells: Vec<Cell>,
}

/// Marginal laws plus the raw inputs they came from.
pub struct LoadedData {
    pub pair: MarginalPair,
    pub clamped_levels: Vec<usize>,
    pub inputs: Vec<InputRecord>,
}

fn table_record(role: &str, path: &Path, table: &ContingencyTable) -> InputRecord {
    InputRecord {
        role: role.into(),
        path: path.to_path_buf(),
        counts: vec![table_counts(table)],
        strata_ids: Vec::new(),
    }
}

fn table_counts(table: &ContingencyTable) -> [Vec<u64>; 2] {
    use ordinal_attribution::ingest::Arm;
    [
        table.row(Arm::Control).to_vec(),
        table.row(Arm::Treated).to_vec(),
    ]
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str, why: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("{why} requires {flag}")))
}

fn forbid(path: &Option<PathBuf>, flag: &str, why: &str) -> Result<(), CliError> {
    match path {
        Some(_) => Err(CliError::Usage(format!("{flag} is not used by {why}"))),
        None => Ok(()),
    }
}

/// Reads the input files named by the config and applies its identification route.
pub fn load(config: &Config) -> Result<LoadedData, CliError> {
    match (config.mode, config.route) {
        (Mode::Pc, Route::Unconfounded) => Err(CliError::Usage(
            "probability of causation needs randomized data; use the experimental route".into(),
        )),
        (Mode::Pc, Route::Experimental) => {
            let why = "pc mode";
            let exp_path = require(&config.exp, "--exp", why)?;
            forbid(&config.obs, "--obs", why)?;
            forbid(&config.strata, "--strata", why)?;
            let exp = read_table(exp_path, Source::Experimental)?;
            Ok(LoadedData {
                pair: randomized_margins(&exp)?,
                clamped_levels: Vec::new(),
                inputs: vec![table_record("experimental", exp_path, &exp)],
            })
        }
        (Mode::Pn, Route::Experimental) => {
            let why = "the experimental route";
            let exp_path = require(&config.exp, "--exp", why)?;
            let obs_path = require(&config.obs, "--obs", why)?;
            forbid(&config.strata, "--strata", why)?;
            let exp = read_table(exp_path, Source::Experimental)?;
            let obs = read_table(obs_path, Source::Observational)?;
            let IdentifiedMargins {
                pair,
                clamped_levels,
            } = counterfactual_margin_experimental(&exp, &obs)?;
            Ok(LoadedData {
                pair,
                clamped_levels,
                inputs: vec![
                    table_record("experimental", exp_path, &exp),
                    table_record("observational", obs_path, &obs),
                ],
            })
        }
        (Mode::Pn, Route::Unconfounded) => {
            let why = "the unconfounded route";
            let strata_path = require(&config.strata, "--strata", why)?;
            forbid(&config.exp, "--exp", why)?;
            forbid(&config.obs, "--obs", why)?;
            let strata = read_strata_json(strata_path)?;
            let IdentifiedMargins {
                pair,
                clamped_levels,
            } = counterfactual_margin_unconfounded(&strata)?;
            Ok(LoadedData {
                pair,
                clamped_levels,
                inputs: vec![InputRecord {
                    role: "strata".into(),
                    path: strata_path.to_path_buf(),
                    counts: strata
                        .strata()
                        .iter()
                        .map(|(_, t)| table_counts(t))
                        .collect(),
                    strata_ids: strata.strata().iter().map(|(id, _)| id.clone()).collect(),
                }],
            })
        }
    }
}

fn lp_cross_check(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    a: AssumptionSet,
    reference: (f64, f64),
) -> CrossCheck {
    let outcome = match pn_bounds_lp(pair, event, y, a) {
        Ok(b) => CrossCheckOutcome::Solved {
            lower: b.lower,
            upper: b.upper,
            agrees: (b.lower - reference.0).abs() <= CROSS_CHECK_TOL
                && (b.upper - reference.1).abs() <= CROSS_CHECK_TOL,
        },
        Err(Error::Infeasible(_)) => CrossCheckOutcome::Infeasible,
        Err(e) => CrossCheckOutcome::Failed {
            message: e.to_string(),
        },
    };
    CrossCheck {
        provenance: LP_TAG,
        outcome,
    }
}

fn bounds_cell(pair: &MarginalPair, event: &EventSpec, y: usize, b: BoundsResult) -> CellOutcome {
    let (provenance, cross_check) = match (b.method, b.assumptions) {
        (Method::LinearProgram, _) => (LP_TAG, None),
        (Method::ClosedForm, a) => {
            let tag = if a == AssumptionSet::MarginalOnly {
                FRECHET_TAG
            } else {
                MONOTONE_TAG
            };
            (
                tag,
                Some(lp_cross_check(pair, event, y, a, (b.lower, b.upper))),
            )
        }
    };
    CellOutcome::Bounds {
        lower: b.lower,
        upper: b.upper,
        provenance,
        contradictory: b.is_contradictory(),
        cross_check,
        witnesses: b.witnesses,
    }
}

fn compute_cell(
    mode: Mode,
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    a: AssumptionSet,
) -> Result<CellOutcome, CliError> {
    let refused = |reason: String, lp_infeasible| CellOutcome::Refused {
        provenance: REFUSAL_TAG,
        reason,
        lp_infeasible,
    };
    if a == AssumptionSet::MonotonicIncrement {
        let point = match mode {
            Mode::Pn => pn_point(pair, event, y),
            Mode::Pc => pc_point(pair, event, y),
        };
        return match point {
            Ok(value) => Ok(CellOutcome::Point {
                value,
                provenance: POINT_TAG,
                cross_check: lp_cross_check(pair, event, y, a, (value, value)),
            }),
            Err(e @ Error::Falsified { .. }) => {
                let lp_infeasible =
                    matches!(pn_bounds_lp(pair, event, y, a), Err(Error::Infeasible(_)));
                Ok(refused(e.to_string(), Some(lp_infeasible)))
            }
            Err(e @ Error::ZeroEvidence { .. }) => Ok(refused(e.to_string(), None)),
            Err(e) => Err(e.into()),
        };
    }
    let bounds = match mode {
        Mode::Pn => pn_bounds(pair, event, y, a),
        Mode::Pc => pc_bounds(pair, event, y, a),
    };
    match bounds {
        Ok(b) => Ok(bounds_cell(pair, event, y, b)),
        Err(e @ (Error::ZeroEvidence { .. } | Error::Infeasible(_))) => Ok(CellOutcome::Refused {
            provenance: LP_TAG,
            reason: e.to_string(),
            lp_infeasible: Some(matches!(e, Error::Infeasible(_))),
        }),
        Err(e) => Err(e.into()),
    }
}

/// Runs the configured ladder over every (evidence, assumption, event) cell.
pub fn run_analysis(config: &Config) -> Result<AttributionReport, CliError> {
    config.validate()?;
    let data = load(config)?;
    analyze(config, data)
}

/// Builds the report for already-loaded marginal laws.
pub fn analyze(config: &Config, data: LoadedData) -> Result<AttributionReport, CliError> {
    let pair = data.pair;
    let levels = pair.levels();
    let templates = config.event_templates(levels);
    let evidence = config.evidence_levels(levels)?;
    let assumptions = config.assumptions();

    let falsification = match config.mode {
        Mode::Pn => falsification_check(&pair),
        Mode::Pc => pc_falsification_check(&pair)?,
    };
    let identified_joint = identify_joint(&pair).ok();
    if assumptions.contains(&AssumptionSet::MonotonicIncrement)
        && !infeasibility_agrees_with_falsification(&pair)?
    {
        return Err(CliError::Internal(
            "falsification check and LP feasibility disagree".into(),
        ));
    }

    let mut cells = Vec::new();
    for &y in &evidence {
        for &a in &assumptions {
            for t in &templates {
                let event = t.resolve(y, levels)?;
                let outcome = compute_cell(config.mode, &pair, &event, y, a)?;
                cells.push(Cell {
                    family: t.label(),
                    event: event.label().to_string(),
                    coeffs: event.coeffs().to_vec(),
                    evidence: y,
                    assumptions: a,
                    outcome,
                });
            }
        }
    }

    Ok(AttributionReport {
        mode: config.mode,
        route: (config.mode == Mode::Pn).then_some(config.route),
        levels,
        inputs: data.inputs,
        marginals: Marginals {
            conditioning: pair.conditioning(),
            treated: pair.treated().probs().to_vec(),
            control: pair.control().probs().to_vec(),
            clamped_levels: data.clamped_levels,
        },
        gaps: Gaps {
            symbol: match pair.conditioning() {
                Conditioning::GivenTreated => "delta",
                Conditioning::Unconditional => "xi",
            },
            values: pair.gaps().as_slice().to_vec(),
        },
        falsification,
        identified_joint,
        families: templates.iter().map(|t| t.label()).collect(),
        evidence,
        assumptions,
        cells,
    })
}

impl AttributionReport {
    pub fn cell(&self, family: &str, y: usize, a: AssumptionSet) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.family == family && c.evidence == y && c.assumptions == a)
    }

    /// Rebuilds the marginal pair the report was computed from.
    pub fn pair(&self) -> Result<MarginalPair, CliError> {
        Ok(MarginalPair::from_probs(
            &self.marginals.treated,
            &self.marginals.control,
            self.marginals.conditioning,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EventTemplate;

    fn lalonde() -> LoadedData {
        let control: Vec<f64> = [92.0, 33.0, 135.0]
            .iter()
            .zip([115.0, 50.0, 205.0])
            .map(|(e, o)| (e / 260.0 - o / 740.0) * 2.0)
            .collect();
        LoadedData {
            pair: MarginalPair::from_probs(
                &[90.0 / 370.0, 64.0 / 370.0, 216.0 / 370.0],
                &control,
                Conditioning::GivenTreated,
            )
            .unwrap(),
            clamped_levels: Vec::new(),
            inputs: Vec::new(),
        }
    }

    #[test]
    fn full_grid_shape_and_cross_checks() {
        let report = analyze(&Config::default(), lalonde()).unwrap();
        assert_eq!(report.cells.len(), 2 * 3 * 5);
        assert_eq!(report.evidence, vec![2, 1]);
        for cell in &report.cells {
            let check = match &cell.outcome {
                CellOutcome::Point { cross_check, .. } => Some(cross_check),
                CellOutcome::Bounds { cross_check, .. } => cross_check.as_ref(),
                CellOutcome::Refused { .. } => panic!("unexpected refusal {cell:?}"),
            };
            if let Some(check) = check {
                assert!(
                    matches!(
                        check.outcome,
                        CrossCheckOutcome::Solved { agrees: true, .. }
                    ),
                    "{cell:?}"
                );
            }
        }
    }

    #[test]
    fn falsified_data_refuse_points() {
        let data = LoadedData {
            pair: MarginalPair::from_probs(
                &[0.6, 0.1, 0.3],
                &[0.1, 0.2, 0.7],
                Conditioning::GivenTreated,
            )
            .unwrap(),
            clamped_levels: Vec::new(),
            inputs: Vec::new(),
        };
        let report = analyze(&Config::default(), data).unwrap();
        assert!(!report.falsification.pass);
        assert!(report.identified_joint.is_none());
        let incremental: Vec<_> = report
            .cells
            .iter()
            .filter(|c| c.assumptions == AssumptionSet::MonotonicIncrement)
            .collect();
        assert!(!incremental.is_empty());
        for c in incremental {
            assert!(matches!(
                c.outcome,
                CellOutcome::Refused {
                    lp_infeasible: Some(true),
                    ..
                }
            ));
        }
    }

    #[test]
    fn custom_events_go_through_lp_under_monotonicity() {
        let config = Config {
            events: vec!["custom:101".parse::<EventTemplate>().unwrap()],
            assume: vec!["mono".parse().unwrap()],
            evidence: vec![2],
            ..Config::default()
        };
        let report = analyze(&config, lalonde()).unwrap();
        assert_eq!(report.cells.len(), 1);
        assert!(matches!(
            report.cells[0].outcome,
            CellOutcome::Bounds {
                provenance: LP_TAG,
                ..
            } | CellOutcome::Bounds {
                provenance: MONOTONE_TAG,
                ..
            }
        ));
    }

    #[test]
    fn route_mismatches_are_usage_errors() {
        let pc_with_obs = Config {
            mode: Mode::Pc,
            exp: Some("a.json".into()),
            obs: Some("b.json".into()),
            ..Config::default()
        };
        assert!(matches!(load(&pc_with_obs), Err(CliError::Usage(_))));
        let pn_without_obs = Config {
            exp: Some("a.json".into()),
            ..Config::default()
        };
        assert!(matches!(load(&pn_without_obs), Err(CliError::Usage(_))));
        let pc_unconfounded = Config {
            mode: Mode::Pc,
            route: Route::Unconfounded,
            ..Config::default()
        };
        assert!(matches!(load(&pc_unconfounded), Err(CliError::Usage(_))));
    }
}
