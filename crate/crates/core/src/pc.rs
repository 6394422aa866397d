//! Probability of causation `pr(event | Y1 = y)` on population laws.
//!
//! The algebra is the same as for the probability of necessity with the
//! unconditional laws of `Y1` and `Y0` in place of the laws given `Z = 1`,
//! so every function here checks the conditioning tag and delegates.

use crate::bounds::{pn_bounds, BoundsResult};
use crate::error::{Error, Result};
use crate::identify::{falsification_check, pn_point, FalsificationReport};
use crate::ordinal::{AssumptionSet, Conditioning, EventSpec, MarginalPair};

fn require_unconditional(pair: &MarginalPair) -> Result<()> {
    if pair.conditioning() != Conditioning::Unconditional {
        return Err(Error::ConditioningMismatch {
            expected: Conditioning::Unconditional.to_string(),
            found: pair.conditioning().to_string(),
        });
    }
    Ok(())
}

/// `c_y + (c_{y-1} - c_y) * xi_y / pr(Y1 = y)` under the incremental effect assumption.
pub fn pc_point(pair: &MarginalPair, event: &EventSpec, y: usize) -> Result<f64> {
    require_unconditional(pair)?;
    pn_point(pair, event, y)
}

pub fn pc_bounds(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    assumptions: AssumptionSet,
) -> Result<BoundsResult> {
    require_unconditional(pair)?;
    pn_bounds(pair, event, y, assumptions)
}

pub fn pc_falsification_check(pair: &MarginalPair) -> Result<FalsificationReport> {
    require_unconditional(pair)?;
    Ok(falsification_check(pair))
}
