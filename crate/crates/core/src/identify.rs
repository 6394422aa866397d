//! Point identification under the monotonic incremental effect assumption
//! (`0 <= Y1 - Y0 <= 1`), and the data check that can falsify it.
//!
//! Under that assumption the joint matrix is supported on the diagonal and
//! the first sub-diagonal, and the marginal constraints pin it down:
//! `q[0][0] = pr(Y1 = 0)`, `q[k][k-1] = gap(k)`, `q[k][k] = pr(Y1 = k) - gap(k)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ordinal::{EventSpec, GapSequence, JointProbabilityMatrix, MarginalPair, TOL};

pub fn gap_sequence(pair: &MarginalPair) -> GapSequence {
    GapSequence::from_pair(pair)
}

/// Fréchet bracket on the sub-diagonal cell `q[k][k-1]` at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub k: usize,
    pub lower: f64,
    pub gap: f64,
    pub upper: f64,
    /// `pr(Y1 = k) - gap(k)`, the implied diagonal cell.
    pub diagonal: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsificationReport {
    pub pass: bool,
    pub brackets: Vec<Bracket>,
}

impl FalsificationReport {
    pub fn first_violation(&self) -> Option<&Bracket> {
        self.brackets.iter().find(|b| !b.holds)
    }

    fn into_error(self) -> Option<Error> {
        self.first_violation().map(|b| Error::Falsified {
            k: b.k,
            lower: b.lower,
            gap: b.gap,
            upper: b.upper,
            diagonal: b.diagonal,
        })
    }
}

/// Checks, for every `k = 1..J`,
/// `max(0, p1[k] + p0[k-1] - 1) <= gap(k) <= min(p1[k], p0[k-1])` and
/// `p1[k] - gap(k) >= 0`, each with slack [`TOL`].
pub fn falsification_check(pair: &MarginalPair) -> FalsificationReport {
    let treated = pair.treated().probs();
    let control = pair.control().probs();
    let gaps = pair.gaps();
    let brackets: Vec<Bracket> = (1..pair.levels())
        .map(|k| {
            let lower = (treated[k] + control[k - 1] - 1.0).max(0.0);
            let upper = treated[k].min(control[k - 1]);
            let gap = gaps.at(k);
            let diagonal = treated[k] - gap;
            let holds = lower - TOL <= gap && gap <= upper + TOL && diagonal >= -TOL;
            Bracket {
                k,
                lower,
                gap,
                upper,
                diagonal,
                holds,
            }
        })
        .collect();
    FalsificationReport {
        pass: brackets.iter().all(|b| b.holds),
        brackets,
    }
}

/// Reconstructs the unique joint matrix compatible with the incremental
/// effect assumption, refusing when the data falsify it.
pub fn identify_joint(pair: &MarginalPair) -> Result<JointProbabilityMatrix> {
    let report = falsification_check(pair);
    if let Some(err) = report.into_error() {
        return Err(err);
    }
    let levels = pair.levels();
    let treated = pair.treated().probs();
    let gaps = pair.gaps();
    let mut q = vec![vec![0.0; levels]; levels];
    q[0][0] = treated[0];
    for k in 1..levels {
        q[k][k - 1] = gaps.at(k).max(0.0);
        q[k][k] = (treated[k] - gaps.at(k)).max(0.0);
    }
    JointProbabilityMatrix::new(q)
}

/// `c_y + (c_{y-1} - c_y) * gap(y) / pr(Y1 = y)`; equals `c_0` at `y = 0`.
pub fn pn_point(pair: &MarginalPair, event: &EventSpec, y: usize) -> Result<f64> {
    if event.levels() != pair.levels() {
        return Err(Error::LevelMismatch {
            expected: pair.levels(),
            found: event.levels(),
        });
    }
    let mass = pair.evidence_mass(y)?;
    if let Some(err) = falsification_check(pair).into_error() {
        return Err(err);
    }
    if y == 0 {
        return Ok(event.coeff(0));
    }
    let gap = pair.gaps().at(y);
    Ok(event.coeff(y) + (event.coeff(y - 1) - event.coeff(y)) * gap / mass)
}
