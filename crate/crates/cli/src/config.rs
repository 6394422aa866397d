//! Run configuration: a JSON file and/or command-line flags, flags winning.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ordinal_attribution::{make_event, AssumptionSet, EventKind, EventSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Probability of necessity, conditional on treatment.
    #[default]
    Pn,
    /// Probability of causation on population laws.
    Pc,
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "pn" => Ok(Mode::Pn),
            "pc" => Ok(Mode::Pc),
            other => Err(CliError::Usage(format!("unknown mode {other:?} (pn|pc)"))),
        }
    }
}

/// How the law of `Y0` among the treated is identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Experimental control arm combined with the observational table.
    #[default]
    Experimental,
    /// Stratified observational data under unconfoundedness.
    Unconfounded,
}

impl FromStr for Route {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "experimental" => Ok(Route::Experimental),
            "unconfounded" => Ok(Route::Unconfounded),
            other => Err(CliError::Usage(format!(
                "unknown route {other:?} (experimental|unconfounded)"
            ))),
        }
    }
}

/// An event family, possibly relative to the evidence level: `noteq:y` and
/// `lt:y` with the literal letter `y` track the evidence, numeric arguments
/// are fixed levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EventTemplate {
    NotEqualEvidence,
    LessThanEvidence,
    Fixed(EventKind),
}

impl EventTemplate {
    pub fn resolve(&self, y: usize, levels: usize) -> Result<EventSpec, CliError> {
        let kind = match self {
            EventTemplate::NotEqualEvidence => EventKind::NotEqual(y),
            EventTemplate::LessThanEvidence => EventKind::LessThan(y),
            EventTemplate::Fixed(kind) => kind.clone(),
        };
        Ok(make_event(&kind, levels)?)
    }

    /// Column heading, e.g. `Y0!=y` or `Y0=1`.
    pub fn label(&self) -> String {
        match self {
            EventTemplate::NotEqualEvidence => "Y0!=y".into(),
            EventTemplate::LessThanEvidence => "Y0<y".into(),
            EventTemplate::Fixed(EventKind::NotEqual(l)) => format!("Y0!={l}"),
            EventTemplate::Fixed(EventKind::Equal(l)) => format!("Y0={l}"),
            EventTemplate::Fixed(EventKind::LessThan(l)) => format!("Y0<{l}"),
            EventTemplate::Fixed(EventKind::Custom(bits)) => {
                let bits: String = bits.iter().map(|c| char::from(b'0' + c)).collect();
                format!("Y0 in {{{bits}}}")
            }
        }
    }

    /// The five families of the standard grid.
    pub fn canonical(levels: usize) -> Vec<EventTemplate> {
        let mut out = vec![EventTemplate::NotEqualEvidence];
        out.extend((0..levels).map(|l| EventTemplate::Fixed(EventKind::Equal(l))));
        out.push(EventTemplate::LessThanEvidence);
        out
    }
}

impl FromStr for EventTemplate {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "noteq:y" | "ne:y" => Ok(EventTemplate::NotEqualEvidence),
            "lt:y" => Ok(EventTemplate::LessThanEvidence),
            other => Ok(EventTemplate::Fixed(other.parse()?)),
        }
    }
}

impl TryFrom<String> for EventTemplate {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<EventTemplate> for String {
    fn from(t: EventTemplate) -> String {
        t.to_string()
    }
}

impl fmt::Display for EventTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventTemplate::NotEqualEvidence => f.write_str("noteq:y"),
            EventTemplate::LessThanEvidence => f.write_str("lt:y"),
            EventTemplate::Fixed(EventKind::NotEqual(l)) => write!(f, "noteq:{l}"),
            EventTemplate::Fixed(EventKind::Equal(l)) => write!(f, "eq:{l}"),
            EventTemplate::Fixed(EventKind::LessThan(l)) => write!(f, "lt:{l}"),
            EventTemplate::Fixed(EventKind::Custom(bits)) => {
                let bits: String = bits.iter().map(|c| char::from(b'0' + c)).collect();
                write!(f, "custom:{bits}")
            }
        }
    }
}

/// `marginal`, `mono`, `incr` or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AssumeArg {
    One(AssumptionSet),
    All,
}

impl FromStr for AssumeArg {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "all" {
            Ok(AssumeArg::All)
        } else {
            s.parse()
                .map(AssumeArg::One)
                .map_err(|e: ordinal_attribution::Error| CliError::Usage(e.to_string()))
        }
    }
}

impl TryFrom<String> for AssumeArg {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<AssumeArg> for String {
    fn from(a: AssumeArg) -> String {
        match a {
            AssumeArg::All => "all".into(),
            AssumeArg::One(set) => set.tag().into(),
        }
    }
}

fn default_samples() -> usize {
    10_000
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub exp: Option<PathBuf>,
    pub obs: Option<PathBuf>,
    pub strata: Option<PathBuf>,
    pub mode: Mode,
    pub route: Route,
    pub events: Vec<EventTemplate>,
    pub evidence: Vec<usize>,
    pub assume: Vec<AssumeArg>,
    pub all_canonical: bool,
    pub verify: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub table: bool,
    pub out: Option<PathBuf>,
    /// Test hook: widen every interval by this much before verification.
    pub widen: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            exp: None,
            obs: None,
            strata: None,
            mode: Mode::default(),
            route: Route::default(),
            events: Vec::new(),
            evidence: Vec::new(),
            assume: Vec::new(),
            all_canonical: false,
            verify: false,
            samples: default_samples(),
            seed: default_seed(),
            table: false,
            out: None,
            widen: 0.0,
        }
    }
}

impl Config {
    /// Loads a JSON config; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Data(ordinal_attribution::Error::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })?;
        let mut config: Config = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.exp,
            &mut config.obs,
            &mut config.strata,
            &mut config.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Assumption sets in the order they are reported.
    pub fn assumptions(&self) -> Vec<AssumptionSet> {
        const ORDER: [AssumptionSet; 3] = [
            AssumptionSet::MonotonicIncrement,
            AssumptionSet::MarginalOnly,
            AssumptionSet::Monotonicity,
        ];
        if self.assume.is_empty() || self.assume.contains(&AssumeArg::All) {
            return ORDER.to_vec();
        }
        ORDER
            .into_iter()
            .filter(|a| self.assume.contains(&AssumeArg::One(*a)))
            .collect()
    }

    /// Requested events, defaulting to the canonical families.
    pub fn event_templates(&self, levels: usize) -> Vec<EventTemplate> {
        if self.all_canonical || self.events.is_empty() {
            let mut out = EventTemplate::canonical(levels);
            for e in &self.events {
                if !out.contains(e) {
                    out.push(e.clone());
                }
            }
            out
        } else {
            self.events.clone()
        }
    }

    /// Evidence levels, highest first; defaults to every level above 0.
    pub fn evidence_levels(&self, levels: usize) -> Result<Vec<usize>, CliError> {
        let mut out: Vec<usize> = if self.evidence.is_empty() {
            (1..levels).collect()
        } else {
            self.evidence.clone()
        };
        if let Some(&bad) = out.iter().find(|&&y| y >= levels) {
            return Err(CliError::Usage(format!(
                "evidence level {bad} out of range for {levels} levels"
            )));
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out.dedup();
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.verify && self.samples == 0 {
            return Err(CliError::Usage("--samples must be at least 1".into()));
        }
        if !(self.widen.is_finite() && self.widen >= 0.0) {
            return Err(CliError::Usage(
                "--widen must be a non-negative number".into(),
            ));
        }
        Ok(())
    }
}
