//! Contingency tables, file loaders and the identification routes that turn
//! them into marginal laws of the potential outcomes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ordinal::{Conditioning, MarginalPair, OrdinalDistribution, TOL};

/// Whether a table comes from a randomized experiment or an observational study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Experimental,
    Observational,
}

impl Source {
    fn key(self) -> &'static str {
        match self {
            Source::Experimental => "experimental",
            Source::Observational => "observational",
        }
    }
}

/// Treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Control = 0,
    Treated = 1,
}

/// Counts of `(Z, Y)` with `counts[z][y]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContingencyTable {
    counts: [Vec<u64>; 2],
    source: Source,
}

impl ContingencyTable {
    pub fn new(control: Vec<u64>, treated: Vec<u64>, source: Source) -> Result<Self> {
        if control.len() != treated.len() {
            return Err(Error::LevelMismatch {
                expected: control.len(),
                found: treated.len(),
            });
        }
        if control.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "table needs at least 2 outcome levels, got {}",
                control.len()
            )));
        }
        for (arm, row) in [&control, &treated].into_iter().enumerate() {
            if row.iter().sum::<u64>() == 0 {
                return Err(Error::EmptyArm {
                    arm: arm as u8,
                    context: format!(" in {} table", source.key()),
                });
            }
        }
        Ok(Self {
            counts: [control, treated],
            source,
        })
    }

    pub fn levels(&self) -> usize {
        self.counts[0].len()
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn row(&self, arm: Arm) -> &[u64] {
        &self.counts[arm as usize]
    }

    pub fn row_total(&self, arm: Arm) -> u64 {
        self.row(arm).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.row_total(Arm::Control) + self.row_total(Arm::Treated)
    }

    /// Same counts with the arms exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            counts: [self.counts[1].clone(), self.counts[0].clone()],
            source: self.source,
        }
    }
}

/// Observational tables split by a discrete covariate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedTable {
    strata: Vec<(String, ContingencyTable)>,
}

impl StratifiedTable {
    pub fn new(strata: Vec<(String, ContingencyTable)>) -> Result<Self> {
        let first = strata
            .first()
            .ok_or_else(|| Error::InvalidArgument("no strata supplied".into()))?;
        let levels = first.1.levels();
        for (_, table) in &strata {
            if table.levels() != levels {
                return Err(Error::LevelMismatch {
                    expected: levels,
                    found: table.levels(),
                });
            }
        }
        Ok(Self { strata })
    }

    pub fn strata(&self) -> &[(String, ContingencyTable)] {
        &self.strata
    }

    pub fn levels(&self) -> usize {
        self.strata[0].1.levels()
    }
}

/// Empirical law of `Y` within arm `arm`.
pub fn empirical_margin(table: &ContingencyTable, arm: Arm) -> Result<OrdinalDistribution> {
    if table.row_total(arm) == 0 {
        return Err(Error::EmptyArm {
            arm: arm as u8,
            context: String::new(),
        });
    }
    OrdinalDistribution::from_counts(table.row(arm))
}

/// Result of an identification route, recording any levels whose value was
/// clamped from tiny negative noise to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifiedMargins {
    pub pair: MarginalPair,
    pub clamped_levels: Vec<usize>,
}

/// Identifies `pr(Y0 | Z = 1)` by combining an experimental control arm with
/// the observational joint of `(Z, Y)`.
pub fn counterfactual_margin_experimental(
    exp: &ContingencyTable,
    obs: &ContingencyTable,
) -> Result<IdentifiedMargins> {
    if exp.source() != Source::Experimental {
        return Err(Error::SourceMismatch(
            "first table must be experimental".into(),
        ));
    }
    if obs.source() != Source::Observational {
        return Err(Error::SourceMismatch(
            "second table must be observational".into(),
        ));
    }
    if exp.levels() != obs.levels() {
        return Err(Error::LevelMismatch {
            expected: exp.levels(),
            found: obs.levels(),
        });
    }
    let exp_control = empirical_margin(exp, Arm::Control)?;
    let treated = empirical_margin(obs, Arm::Treated)?;
    let total = obs.total() as f64;
    let pr_treated = obs.row_total(Arm::Treated) as f64 / total;
    let raw: Vec<f64> = exp_control
        .probs()
        .iter()
        .zip(obs.row(Arm::Control))
        .map(|(pe, &n0)| (pe - n0 as f64 / total) / pr_treated)
        .collect();
    let (control, clamped_levels) = clamp_to_distribution(raw)?;
    Ok(IdentifiedMargins {
        pair: MarginalPair::new(treated, control, Conditioning::GivenTreated)?,
        clamped_levels,
    })
}

fn clamp_to_distribution(mut raw: Vec<f64>) -> Result<(OrdinalDistribution, Vec<usize>)> {
    let mut clamped = Vec::new();
    for (level, value) in raw.iter_mut().enumerate() {
        if *value < -TOL || *value > 1.0 + TOL || !value.is_finite() {
            return Err(Error::IncompatibleSources {
                level,
                value: *value,
            });
        }
        if *value < 0.0 {
            *value = 0.0;
            clamped.push(level);
        } else if *value > 1.0 {
            *value = 1.0;
        }
    }
    if !clamped.is_empty() {
        let total: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|v| *v /= total);
    }
    Ok((OrdinalDistribution::new(raw)?, clamped))
}

/// Identifies `pr(Y0 | Z = 1)` by standardizing stratum-specific control laws
/// to the covariate distribution of the treated.
pub fn counterfactual_margin_unconfounded(strata: &StratifiedTable) -> Result<IdentifiedMargins> {
    let levels = strata.levels();
    let mut pooled_treated = vec![0u64; levels];
    let mut control = vec![0.0; levels];
    let treated_total: u64 = strata
        .strata()
        .iter()
        .map(|(_, t)| t.row_total(Arm::Treated))
        .sum();
    for (id, table) in strata.strata() {
        for arm in [Arm::Control, Arm::Treated] {
            if table.row_total(arm) == 0 {
                return Err(Error::EmptyArm {
                    arm: arm as u8,
                    context: format!(" in stratum {id:?} (overlap violated)"),
                });
            }
        }
        let weight = table.row_total(Arm::Treated) as f64 / treated_total as f64;
        let stratum_control = empirical_margin(table, Arm::Control)?;
        for (acc, p) in control.iter_mut().zip(stratum_control.probs()) {
            *acc += weight * p;
        }
        for (acc, n) in pooled_treated.iter_mut().zip(table.row(Arm::Treated)) {
            *acc += n;
        }
    }
    let (control, clamped_levels) = clamp_to_distribution(control)?;
    Ok(IdentifiedMargins {
        pair: MarginalPair::new(
            OrdinalDistribution::from_counts(&pooled_treated)?,
            control,
            Conditioning::GivenTreated,
        )?,
        clamped_levels,
    })
}

/// Population laws of `Y1` and `Y0` from a randomized experiment.
pub fn randomized_margins(exp: &ContingencyTable) -> Result<MarginalPair> {
    if exp.source() != Source::Experimental {
        return Err(Error::SourceMismatch(
            "unconditional laws require an experimental table".into(),
        ));
    }
    MarginalPair::new(
        empirical_margin(exp, Arm::Treated)?,
        empirical_margin(exp, Arm::Control)?,
        Conditioning::Unconditional,
    )
}

#[derive(Deserialize)]
struct CsvRecord {
    z: u8,
    y: usize,
    count: u64,
}

/// Reads a long-form `z,y,count` CSV. Missing cells count as zero.
pub fn read_table_csv(path: &Path, source: Source) -> Result<ContingencyTable> {
    let text = read_text(path)?;
    parse_table_csv(&text, path, source)
}

fn parse_table_csv(text: &str, path: &Path, source: Source) -> Result<ContingencyTable> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["z", "y", "count"] {
        return Err(parse_err(1, "header must be `z,y,count`".into()));
    }
    let mut cells: BTreeMap<(u8, usize), (u64, u64)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        let row: CsvRecord = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(line, e.to_string()))?;
        if row.z > 1 {
            return Err(parse_err(line, format!("z must be 0 or 1, got {}", row.z)));
        }
        if let Some((_, first)) = cells.insert((row.z, row.y), (row.count, line)) {
            return Err(parse_err(
                line,
                format!(
                    "duplicate cell z={}, y={} (first on line {first})",
                    row.z, row.y
                ),
            ));
        }
    }
    let levels = cells
        .keys()
        .map(|&(_, y)| y + 1)
        .max()
        .ok_or_else(|| parse_err(1, "no data rows".into()))?;
    let mut counts = [vec![0u64; levels], vec![0u64; levels]];
    for ((z, y), (count, _)) in cells {
        counts[z as usize][y] = count;
    }
    let [control, treated] = counts;
    ContingencyTable::new(control, treated, source)
}

/// Reads a JSON table. Accepted shapes: `{"counts": [[z=0 row], [z=1 row]]}`,
/// a bare `[[..], [..]]`, or a bundle whose `"experimental"` / `"observational"`
/// key holds either of those.
pub fn read_table_json(path: &Path, source: Source) -> Result<ContingencyTable> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| json_err(path, &e))?;
    let value = value.get(source.key()).unwrap_or(&value);
    let (control, treated) = counts_from_json(value).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    })?;
    ContingencyTable::new(control, treated, source)
}

/// Reads a `.csv` or `.json` table, dispatching on the extension.
pub fn read_table(path: &Path, source: Source) -> Result<ContingencyTable> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_table_csv(path, source),
        _ => read_table_json(path, source),
    }
}

/// Reads strata from a JSON list `[{"id": .., "counts": [[..], [..]]}, ..]`
/// or an object keyed by stratum id.
pub fn read_strata_json(path: &Path) -> Result<StratifiedTable> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| json_err(path, &e))?;
    let bad = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    };
    let entries: Vec<(String, &Value)> = match &value {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let id = match item.get("id") {
                    Some(Value::String(s)) => s.clone(),
                    Some(other) => other.to_string(),
                    None => i.to_string(),
                };
                (id, item)
            })
            .collect(),
        Value::Object(map) => map.iter().map(|(k, v)| (k.clone(), v)).collect(),
        _ => return Err(bad("strata must be a list or an object".into())),
    };
    let strata = entries
        .into_iter()
        .map(|(id, item)| {
            let (control, treated) =
                counts_from_json(item).map_err(|m| bad(format!("stratum {id:?}: {m}")))?;
            Ok((
                id,
                ContingencyTable::new(control, treated, Source::Observational)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    StratifiedTable::new(strata)
}

fn counts_from_json(value: &Value) -> std::result::Result<(Vec<u64>, Vec<u64>), String> {
    let rows = value.get("counts").unwrap_or(value);
    let rows: Vec<Vec<u64>> = serde_json::from_value(rows.clone())
        .map_err(|e| format!("expected a 2xJ array of non-negative integer counts: {e}"))?;
    match <[Vec<u64>; 2]>::try_from(rows) {
        Ok([control, treated]) => Ok((control, treated)),
        Err(rows) => Err(format!("expected 2 rows (z=0, z=1), got {}", rows.len())),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn json_err(path: &Path, e: &serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lalonde() -> (ContingencyTable, ContingencyTable) {
        (
            ContingencyTable::new(vec![92, 33, 135], vec![45, 32, 108], Source::Experimental)
                .unwrap(),
            ContingencyTable::new(vec![115, 50, 205], vec![90, 64, 216], Source::Observational)
                .unwrap(),
        )
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn empirical_margins_of_lalonde() {
        let (exp, obs) = lalonde();
        let m = empirical_margin(&exp, Arm::Control).unwrap();
        assert!(close(
            m.probs(),
            &[92.0 / 260.0, 33.0 / 260.0, 135.0 / 260.0],
            1e-15
        ));
        assert!(close(m.probs(), &[0.3538, 0.1269, 0.5192], 1e-4));
        let m = empirical_margin(&obs, Arm::Treated).unwrap();
        assert!(close(m.probs(), &[0.2432, 0.1730, 0.5838], 1e-4));
    }

    #[test]
    fn single_cell_margin() {
        let t = ContingencyTable::new(vec![1, 0], vec![0, 1], Source::Observational).unwrap();
        assert_eq!(
            empirical_margin(&t, Arm::Treated).unwrap().probs(),
            &[0.0, 1.0]
        );
        assert_eq!(
            empirical_margin(&t, Arm::Control).unwrap().probs(),
            &[1.0, 0.0]
        );
    }

    #[test]
    fn empty_arm_rejected() {
        let err = ContingencyTable::new(vec![0, 0], vec![1, 1], Source::Observational);
        assert!(matches!(err, Err(Error::EmptyArm { arm: 0, .. })));
    }

    #[test]
    fn experimental_route_on_lalonde() {
        let (exp, obs) = lalonde();
        let id = counterfactual_margin_experimental(&exp, &obs).unwrap();
        let expected: Vec<f64> = [92.0, 33.0, 135.0]
            .iter()
            .zip([115.0, 50.0, 205.0])
            .map(|(e, o)| (e / 260.0 - o / 740.0) / (370.0 / 740.0))
            .collect();
        assert!(close(id.pair.control().probs(), &expected, 1e-12));
        assert!(close(
            id.pair.control().probs(),
            &[0.3968, 0.1187, 0.4844],
            1e-4
        ));
        assert!(id.clamped_levels.is_empty());
        let total: f64 = id.pair.control().probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn experimental_route_collapses_for_identical_arms() {
        let exp =
            ContingencyTable::new(vec![2, 3, 5], vec![2, 3, 5], Source::Experimental).unwrap();
        let obs =
            ContingencyTable::new(vec![2, 3, 5], vec![2, 3, 5], Source::Observational).unwrap();
        let id = counterfactual_margin_experimental(&exp, &obs).unwrap();
        assert!(close(id.pair.control().probs(), &[0.2, 0.3, 0.5], 1e-12));
    }

    #[test]
    fn experimental_route_detects_incompatibility() {
        let exp = ContingencyTable::new(vec![1, 9], vec![5, 5], Source::Experimental).unwrap();
        let obs = ContingencyTable::new(vec![8, 2], vec![5, 5], Source::Observational).unwrap();
        assert!(matches!(
            counterfactual_margin_experimental(&exp, &obs),
            Err(Error::IncompatibleSources { level: 0, .. })
        ));
        assert!(matches!(
            counterfactual_margin_experimental(&obs, &exp),
            Err(Error::SourceMismatch(_))
        ));
    }

    #[test]
    fn clamping_of_float_noise() {
        let (d, clamped) = clamp_to_distribution(vec![-5e-10, 0.5, 0.5 + 5e-10]).unwrap();
        assert_eq!(clamped, vec![0]);
        assert_eq!(d.prob(0), 0.0);
        assert!(clamp_to_distribution(vec![-2e-9, 0.5, 0.5]).is_err());
    }

    #[test]
    fn unconfounded_single_stratum() {
        let t = ContingencyTable::new(vec![3, 1, 4], vec![1, 5, 9], Source::Observational).unwrap();
        let strata = StratifiedTable::new(vec![("a".into(), t.clone())]).unwrap();
        let id = counterfactual_margin_unconfounded(&strata).unwrap();
        let direct = empirical_margin(&t, Arm::Control).unwrap();
        assert!(close(id.pair.control().probs(), direct.probs(), 1e-15));
        assert!(close(
            id.pair.treated().probs(),
            empirical_margin(&t, Arm::Treated).unwrap().probs(),
            1e-15
        ));
    }

    #[test]
    fn unconfounded_symmetric_strata() {
        let a = ContingencyTable::new(vec![4, 0], vec![3, 2], Source::Observational).unwrap();
        let b = ContingencyTable::new(vec![0, 7], vec![1, 4], Source::Observational).unwrap();
        let strata = StratifiedTable::new(vec![("a".into(), a), ("b".into(), b)]).unwrap();
        let id = counterfactual_margin_unconfounded(&strata).unwrap();
        assert!(close(id.pair.control().probs(), &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn unconfounded_three_strata_weighted_sum() {
        // Hand recomputation: treated sizes 10, 20, 30 of 60.
        let s1 =
            ContingencyTable::new(vec![5, 3, 2], vec![2, 3, 5], Source::Observational).unwrap();
        let s2 =
            ContingencyTable::new(vec![1, 1, 2], vec![4, 6, 10], Source::Observational).unwrap();
        let s3 =
            ContingencyTable::new(vec![0, 6, 4], vec![6, 9, 15], Source::Observational).unwrap();
        let strata =
            StratifiedTable::new(vec![("1".into(), s1), ("2".into(), s2), ("3".into(), s3)])
                .unwrap();
        let id = counterfactual_margin_unconfounded(&strata).unwrap();
        let expected = [
            (10.0 * 0.5 + 20.0 * 0.25 + 30.0 * 0.0) / 60.0,
            (10.0 * 0.3 + 20.0 * 0.25 + 30.0 * 0.6) / 60.0,
            (10.0 * 0.2 + 20.0 * 0.5 + 30.0 * 0.4) / 60.0,
        ];
        assert!(close(id.pair.control().probs(), &expected, 1e-12));
        assert!(close(id.pair.treated().probs(), &[0.2, 0.3, 0.5], 1e-12));
    }

    #[test]
    fn randomized_margins_swap_with_arms() {
        let (exp, _) = lalonde();
        let pair = randomized_margins(&exp).unwrap();
        assert_eq!(pair.conditioning(), Conditioning::Unconditional);
        assert!(close(
            pair.treated().probs(),
            &[45.0 / 185.0, 32.0 / 185.0, 108.0 / 185.0],
            1e-15
        ));
        let swapped = randomized_margins(&exp.swapped()).unwrap();
        assert_eq!(swapped.treated().probs(), pair.control().probs());
        assert_eq!(swapped.control().probs(), pair.treated().probs());
        let point = ContingencyTable::new(vec![0, 4], vec![3, 0], Source::Experimental).unwrap();
        let pair = randomized_margins(&point).unwrap();
        assert_eq!(pair.treated().probs(), &[1.0, 0.0]);
        assert_eq!(pair.control().probs(), &[0.0, 1.0]);
    }

    #[test]
    fn csv_parsing_and_diagnostics() {
        let path = Path::new("t.csv");
        let t = parse_table_csv(
            "z,y,count\n0,0,92\n0,1,33\n0,2,135\n1,0,45\n1,1,32\n1,2,108\n",
            path,
            Source::Experimental,
        )
        .unwrap();
        assert_eq!(t.row(Arm::Control), &[92, 33, 135]);
        assert_eq!(t.row(Arm::Treated), &[45, 32, 108]);

        let err =
            parse_table_csv("z,y,count\n0,0,1\n1,0,x\n", path, Source::Experimental).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err =
            parse_table_csv("z,y,count\n0,0,1\n0,0,2\n", path, Source::Experimental).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse_table_csv("a,b,c\n", path, Source::Experimental).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_table_csv("z,y,count\n2,0,1\n", path, Source::Experimental).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
