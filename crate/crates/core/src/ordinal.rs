//! Domain types: ordinal laws, marginal pairs, joint matrices of potential
//! outcomes and counterfactual events on the untreated outcome.
//!
//! Joint matrices are always indexed `[k][l]` with `k` the level of the
//! treated potential outcome `Y1` and `l` the level of the untreated
//! potential outcome `Y0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for probability equalities.
pub const TOL: f64 = 1e-9;

/// Probability vector over ordinal levels `0..J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalDistribution {
    probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    counts: Option<Vec<u64>>,
}

impl OrdinalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 levels, got {}",
                probs.len()
            )));
        }
        if let Some((k, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} at level {k} is not in [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            probs,
            counts: None,
        })
    }

    /// Normalizes raw counts once, keeping them for provenance.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let mut dist = Self::new(probs)?;
        dist.counts = Some(counts.to_vec());
        Ok(dist)
    }

    pub fn levels(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, level: usize) -> f64 {
        self.probs[level]
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// `pr(Y <= level)`; zero for negative levels is handled by callers
    /// through [`OrdinalDistribution::cdf_below`].
    pub fn cdf(&self, level: usize) -> f64 {
        self.probs[..=level].iter().sum()
    }

    /// `pr(Y < level)`.
    pub fn cdf_below(&self, level: usize) -> f64 {
        self.probs[..level].iter().sum()
    }
}

/// Which population the two laws of a [`MarginalPair`] describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Laws of `Y1` and `Y0` among the treated (`Z = 1`): PN inputs.
    GivenTreated,
    /// Population laws of `Y1` and `Y0`: PC inputs.
    Unconditional,
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conditioning::GivenTreated => f.write_str("given-treated"),
            Conditioning::Unconditional => f.write_str("unconditional"),
        }
    }
}

/// Laws of the treated and untreated potential outcomes on a common
/// conditioning set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPair {
    treated: OrdinalDistribution,
    control: OrdinalDistribution,
    conditioning: Conditioning,
}

impl MarginalPair {
    pub fn new(
        treated: OrdinalDistribution,
        control: OrdinalDistribution,
        conditioning: Conditioning,
    ) -> Result<Self> {
        if treated.levels() != control.levels() {
            return Err(Error::LevelMismatch {
                expected: treated.levels(),
                found: control.levels(),
            });
        }
        Ok(Self {
            treated,
            control,
            conditioning,
        })
    }

    /// Convenience constructor from raw probability vectors.
    pub fn from_probs(
        treated: &[f64],
        control: &[f64],
        conditioning: Conditioning,
    ) -> Result<Self> {
        Self::new(
            OrdinalDistribution::new(treated.to_vec())?,
            OrdinalDistribution::new(control.to_vec())?,
            conditioning,
        )
    }

    pub fn levels(&self) -> usize {
        self.treated.levels()
    }

    /// Law of `Y1`.
    pub fn treated(&self) -> &OrdinalDistribution {
        &self.treated
    }

    /// Law of `Y0`.
    pub fn control(&self) -> &OrdinalDistribution {
        &self.control
    }

    pub fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    pub fn gaps(&self) -> GapSequence {
        GapSequence::from_pair(self)
    }

    pub(crate) fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.levels() {
            return Err(Error::LevelOutOfRange {
                level,
                levels: self.levels(),
            });
        }
        Ok(())
    }

    /// `pr(Y1 = y)`, refusing levels with no mass.
    pub(crate) fn evidence_mass(&self, y: usize) -> Result<f64> {
        self.check_level(y)?;
        let mass = self.treated.prob(y);
        if mass <= 0.0 {
            return Err(Error::ZeroEvidence { level: y });
        }
        Ok(mass)
    }
}

/// Cumulative gaps `pr(Y0 < k) - pr(Y1 < k)` for `k = 1..J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSequence {
    gaps: Vec<f64>,
}

impl GapSequence {
    pub fn from_pair(pair: &MarginalPair) -> Self {
        let treated = pair.treated().probs();
        let control = pair.control().probs();
        let mut running = 0.0;
        let gaps = (0..pair.levels() - 1)
            .map(|j| {
                running += control[j] - treated[j];
                running
            })
            .collect();
        Self { gaps }
    }

    /// Gap at level `k`; the empty sum at `k = 0` is zero.
    pub fn at(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.gaps[k - 1]
        }
    }

    /// Entries for `k = 1..J`, stored at index `k - 1`.
    pub fn as_slice(&self) -> &[f64] {
        &self.gaps
    }
}

/// Joint law of `(Y1, Y0)` as a `J x J` matrix, rows indexed by `Y1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointProbabilityMatrix {
    levels: usize,
    entries: Vec<Vec<f64>>,
}

impl JointProbabilityMatrix {
    /// Entries in `[-TOL, 0)` are treated as rounding noise and set to zero.
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let levels = entries.len();
        if levels < 2 {
            return Err(Error::Dimension(format!(
                "joint matrix needs at least 2 levels, got {levels}"
            )));
        }
        let mut entries = entries;
        for (k, row) in entries.iter_mut().enumerate() {
            if row.len() != levels {
                return Err(Error::Dimension(format!(
                    "row {k} has {} entries, expected {levels}",
                    row.len()
                )));
            }
            for (l, q) in row.iter_mut().enumerate() {
                if !q.is_finite() || *q < -TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "joint entry ({k}, {l}) = {q} is negative"
                    )));
                }
                if *q < 0.0 {
                    *q = 0.0;
                }
            }
        }
        let total: f64 = entries.iter().flatten().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidDistribution(format!(
                "joint entries sum to {total}"
            )));
        }
        Ok(Self { levels, entries })
    }

    /// Builds from a row-major vector of length `J^2`.
    pub fn from_row_major(levels: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != levels * levels {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                levels * levels,
                flat.len()
            )));
        }
        Self::new(flat.chunks(levels).map(<[f64]>::to_vec).collect())
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k][l]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|l| self.entries.iter().map(|row| row[l]).sum())
            .collect()
    }

    /// Largest absolute deviation of the margins from `pair`.
    pub fn margin_error(&self, pair: &MarginalPair) -> f64 {
        let rows = self.row_sums();
        let cols = self.col_sums();
        rows.iter()
            .zip(pair.treated().probs())
            .chain(cols.iter().zip(pair.control().probs()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn matches(&self, pair: &MarginalPair, tol: f64) -> bool {
        self.levels == pair.levels() && self.margin_error(pair) <= tol
    }

    /// Whether every cell forbidden by `assumptions` is exactly zero.
    pub fn respects(&self, assumptions: AssumptionSet) -> bool {
        (0..self.levels).all(|k| {
            (0..self.levels).all(|l| assumptions.allows(k, l) || self.entries[k][l] == 0.0)
        })
    }

    pub fn to_marginals(&self, conditioning: Conditioning) -> Result<MarginalPair> {
        MarginalPair::from_probs(&self.row_sums(), &self.col_sums(), conditioning)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Named families of counterfactual events on `Y0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `Y0 != y`
    NotEqual(usize),
    /// `Y0 = y'`
    Equal(usize),
    /// `Y0 < y`
    LessThan(usize),
    /// Arbitrary indicator over levels.
    Custom(Vec<u8>),
}

impl FromStr for EventKind {
    type Err = Error;

    /// Parses `noteq:y`, `eq:y`, `lt:y` or `custom:0110`.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidEvent(format!("expected <kind>:<arg>, got {s:?}")))?;
        let level = || {
            arg.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidEvent(format!("bad level {arg:?} in {s:?}")))
        };
        match tag.trim() {
            "noteq" | "ne" => Ok(EventKind::NotEqual(level()?)),
            "eq" => Ok(EventKind::Equal(level()?)),
            "lt" => Ok(EventKind::LessThan(level()?)),
            "custom" => arg
                .trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(Error::InvalidEvent(format!(
                        "custom coefficient {other:?} is not 0 or 1"
                    ))),
                })
                .collect::<Result<Vec<u8>>>()
                .map(EventKind::Custom),
            other => Err(Error::InvalidEvent(format!("unknown event kind {other:?}"))),
        }
    }
}

/// Indicator vector `(c_0, ..., c_{J-1})` of an event on `Y0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSpec {
    coeffs: Vec<u8>,
    label: String,
}

impl EventSpec {
    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn coeff(&self, level: usize) -> f64 {
        f64::from(self.coeffs[level])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn levels(&self) -> usize {
        self.coeffs.len()
    }

    pub fn complement(&self) -> EventSpec {
        EventSpec {
            coeffs: self.coeffs.iter().map(|c| 1 - c).collect(),
            label: format!("not({})", self.label),
        }
    }

    /// `sum_l c_l * probs[l]`.
    pub fn mass(&self, probs: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(probs)
            .filter(|(c, _)| **c == 1)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn is_full(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 1)
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Builds the indicator vector of a named event family over `levels` levels.
pub fn make_event(kind: &EventKind, levels: usize) -> Result<EventSpec> {
    let check = |level: usize| {
        if level >= levels {
            Err(Error::LevelOutOfRange { level, levels })
        } else {
            Ok(level)
        }
    };
    let (coeffs, label) = match kind {
        EventKind::NotEqual(y) => {
            let y = check(*y)?;
            (
                (0..levels).map(|l| u8::from(l != y)).collect(),
                format!("Y0!={y}"),
            )
        }
        EventKind::Equal(y) => {
            let y = check(*y)?;
            (
                (0..levels).map(|l| u8::from(l == y)).collect(),
                format!("Y0={y}"),
            )
        }
        EventKind::LessThan(y) => {
            let y = check(*y)?;
            (
                (0..levels).map(|l| u8::from(l < y)).collect(),
                format!("Y0<{y}"),
            )
        }
        EventKind::Custom(coeffs) => {
            if coeffs.len() != levels {
                return Err(Error::InvalidEvent(format!(
                    "custom event has {} coefficients for {levels} levels",
                    coeffs.len()
                )));
            }
            if coeffs.iter().any(|&c| c > 1) {
                return Err(Error::InvalidEvent(
                    "custom coefficients must be 0 or 1".into(),
                ));
            }
            let bits: String = coeffs.iter().map(|c| char::from(b'0' + c)).collect();
            (coeffs.clone(), format!("Y0 in {{{bits}}}"))
        }
    };
    Ok(EventSpec { coeffs, label })
}

/// The assumption ladder, from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionSet {
    /// Only the two marginal laws are known.
    MarginalOnly,
    /// Additionally `Y0 <= Y1`.
    Monotonicity,
    /// Additionally `0 <= Y1 - Y0 <= 1`.
    MonotonicIncrement,
}

impl AssumptionSet {
    pub const LADDER: [AssumptionSet; 3] = [
        AssumptionSet::MarginalOnly,
        AssumptionSet::Monotonicity,
        AssumptionSet::MonotonicIncrement,
    ];

    /// Whether cell `(k, l)` = `(Y1, Y0)` may carry mass.
    pub fn allows(self, k: usize, l: usize) -> bool {
        match self {
            AssumptionSet::MarginalOnly => true,
            AssumptionSet::Monotonicity => l <= k,
            AssumptionSet::MonotonicIncrement => l <= k && k <= l + 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            AssumptionSet::MarginalOnly => "marginal",
            AssumptionSet::Monotonicity => "mono",
            AssumptionSet::MonotonicIncrement => "incr",
        }
    }
}

impl fmt::Display for AssumptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssumptionSet::MarginalOnly => "marginal-only",
            AssumptionSet::Monotonicity => "monotonicity",
            AssumptionSet::MonotonicIncrement => "monotonic-increment",
        })
    }
}

impl FromStr for AssumptionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(AssumptionSet::MarginalOnly),
            "mono" => Ok(AssumptionSet::Monotonicity),
            "incr" => Ok(AssumptionSet::MonotonicIncrement),
            other => Err(Error::InvalidArgument(format!(
                "unknown assumption set {other:?} (marginal|mono|incr)"
            ))),
        }
    }
}

/// `pr(event | Y1 = y)` under a fully specified joint matrix.
pub fn pn_from_joint(joint: &JointProbabilityMatrix, event: &EventSpec, y: usize) -> Result<f64> {
    if event.levels() != joint.levels() {
        return Err(Error::LevelMismatch {
            expected: joint.levels(),
            found: event.levels(),
        });
    }
    if y >= joint.levels() {
        return Err(Error::LevelOutOfRange {
            level: y,
            levels: joint.levels(),
        });
    }
    let row = &joint.rows()[y];
    let mass: f64 = row.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroEvidence { level: y });
    }
    Ok(event.mass(row) / mass)
}
