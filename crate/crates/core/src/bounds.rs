//! Closed-form sharp bounds on `pr(event | Y1 = y)`.
//!
//! With only the marginals known the bounds are the Fréchet bounds on
//! `pr(Y1 = y, event)`. Under monotonicity the joint matrix is lower
//! triangular and closed forms exist for `Y0 != y` and `Y0 = y'`; any event
//! that reduces to one of those on the support `{0..=y}` is handled here,
//! everything else goes to [`crate::lp::pn_bounds_lp`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::pn_bounds_lp;
use crate::oracle::{extremal_witness_marginal, Endpoint};
use crate::ordinal::{AssumptionSet, EventSpec, JointProbabilityMatrix, MarginalPair, TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    LinearProgram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub assumptions: AssumptionSet,
    pub method: Method,
    /// Joint matrices attaining `(lower, upper)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<(JointProbabilityMatrix, JointProbabilityMatrix)>,
}

impl BoundsResult {
    fn closed(lower: f64, upper: f64, assumptions: AssumptionSet) -> Self {
        Self {
            lower,
            upper,
            assumptions,
            method: Method::ClosedForm,
            witnesses: None,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// `lower > upper` beyond tolerance: the data contradict the assumption
    /// the bounds were derived under.
    pub fn is_contradictory(&self) -> bool {
        self.lower > self.upper + TOL
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }

    /// Complementary event: `[1 - upper, 1 - lower]`.
    fn complemented(self) -> Self {
        let witnesses = self.witnesses.map(|(lo, hi)| (hi, lo));
        Self {
            lower: 1.0 - self.upper,
            upper: 1.0 - self.lower,
            witnesses,
            ..self
        }
    }
}

fn check_event(pair: &MarginalPair, event: &EventSpec) -> Result<()> {
    if event.levels() != pair.levels() {
        return Err(Error::LevelMismatch {
            expected: pair.levels(),
            found: event.levels(),
        });
    }
    Ok(())
}

/// Sharp bounds from the marginals alone, with witness matrices attaining
/// both endpoints.
pub fn pn_bounds_marginal(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
) -> Result<BoundsResult> {
    check_event(pair, event)?;
    let mass = pair.evidence_mass(y)?;
    let (lower, upper) = marginal_closed_form(pair, event, mass);
    let witnesses = (
        extremal_witness_marginal(pair, event, y, Endpoint::Lower)?,
        extremal_witness_marginal(pair, event, y, Endpoint::Upper)?,
    );
    Ok(BoundsResult {
        witnesses: Some(witnesses),
        ..BoundsResult::closed(lower, upper, AssumptionSet::MarginalOnly)
    })
}

pub(crate) fn marginal_closed_form(
    pair: &MarginalPair,
    event: &EventSpec,
    mass: f64,
) -> (f64, f64) {
    let control = pair.control().probs();
    let outside = event.complement().mass(control);
    let inside = event.mass(control);
    (((mass - outside) / mass).max(0.0), (inside / mass).min(1.0))
}

/// How an event looks from row `y` of a lower-triangular joint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MonotoneForm {
    NotEqual,
    Equal(usize),
    NotEqualTo(usize),
    Empty,
    Full,
}

fn monotone_form(event: &EventSpec, y: usize) -> Option<MonotoneForm> {
    let support = &event.coeffs()[..=y];
    let ones: Vec<usize> = (0..=y).filter(|&l| support[l] == 1).collect();
    let zeros: Vec<usize> = (0..=y).filter(|&l| support[l] == 0).collect();
    match (ones.as_slice(), zeros.as_slice()) {
        (_, [z]) if *z == y => Some(MonotoneForm::NotEqual),
        ([o], _) => Some(MonotoneForm::Equal(*o)),
        ([], _) => Some(MonotoneForm::Empty),
        (_, []) => Some(MonotoneForm::Full),
        (_, [z]) => Some(MonotoneForm::NotEqualTo(*z)),
        _ => None,
    }
}

/// Sharp bounds under monotonicity for events equivalent (given `Y0 <= y`)
/// to `Y0 != y`, `Y0 = y'` or `Y0 != y'`.
///
/// Endpoints are not clipped against each other: when the data violate the
/// monotonicity implication the result has `lower > upper`, reported through
/// [`BoundsResult::is_contradictory`].
pub fn pn_bounds_monotone(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
) -> Result<BoundsResult> {
    check_event(pair, event)?;
    let mass = pair.evidence_mass(y)?;
    let form = monotone_form(event, y)
        .ok_or_else(|| Error::UnsupportedEvent(event.label().to_string()))?;
    let treated = pair.treated();
    let control = pair.control();
    let gaps = pair.gaps();
    let mono = AssumptionSet::Monotonicity;
    let equal = |target: usize| {
        let lower = (treated.prob(y) + treated.cdf_below(target) - control.cdf(y)
            + control.prob(target))
            / mass;
        let upper = ((target + 1)..=y)
            .map(|k| gaps.at(k) / mass)
            .fold((control.prob(target) / mass).min(1.0), f64::min);
        BoundsResult::closed(lower.max(0.0), upper, mono)
    };
    Ok(match form {
        MonotoneForm::NotEqual => BoundsResult::closed(
            ((treated.prob(y) - control.prob(y)) / mass).max(0.0),
            (gaps.at(y) / mass).min(1.0),
            mono,
        ),
        MonotoneForm::Equal(target) => equal(target),
        MonotoneForm::NotEqualTo(target) => equal(target).complemented(),
        MonotoneForm::Empty => BoundsResult::closed(0.0, 0.0, mono),
        MonotoneForm::Full => BoundsResult::closed(1.0, 1.0, mono),
    })
}

/// Bounds under any rung of the ladder: closed forms where they exist, the
/// linear program otherwise (always for the incremental assumption).
pub fn pn_bounds(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    assumptions: AssumptionSet,
) -> Result<BoundsResult> {
    match assumptions {
        AssumptionSet::MarginalOnly => pn_bounds_marginal(pair, event, y),
        AssumptionSet::Monotonicity => match pn_bounds_monotone(pair, event, y) {
            Err(Error::UnsupportedEvent(_)) => pn_bounds_lp(pair, event, y, assumptions),
            other => other,
        },
        AssumptionSet::MonotonicIncrement => pn_bounds_lp(pair, event, y, assumptions),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::{make_event, Conditioning, EventKind};

    fn lalonde_pn() -> MarginalPair {
        let control: Vec<f64> = [92.0, 33.0, 135.0]
            .iter()
            .zip([115.0, 50.0, 205.0])
            .map(|(e, o)| (e / 260.0 - o / 740.0) * 2.0)
            .collect();
        MarginalPair::from_probs(
            &[90.0 / 370.0, 64.0 / 370.0, 216.0 / 370.0],
            &control,
            Conditioning::GivenTreated,
        )
        .unwrap()
    }

    fn ev(kind: EventKind) -> EventSpec {
        make_event(&kind, 3).unwrap()
    }

    fn near(b: &BoundsResult, lower: f64, upper: f64) {
        assert!(
            (b.lower - lower).abs() < 0.005 && (b.upper - upper).abs() < 0.005,
            "[{}, {}] vs [{lower}, {upper}]",
            b.lower,
            b.upper
        );
    }

    #[test]
    fn marginal_bounds_on_lalonde() {
        let pair = lalonde_pn();
        near(
            &pn_bounds_marginal(&pair, &ev(EventKind::NotEqual(2)), 2).unwrap(),
            0.17,
            0.88,
        );
        near(
            &pn_bounds_marginal(&pair, &ev(EventKind::Equal(1)), 2).unwrap(),
            0.0,
            0.20,
        );
        let full = ev(EventKind::Custom(vec![1, 1, 1]));
        let b = pn_bounds_marginal(&pair, &full, 2).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
    }

    #[test]
    fn marginal_witnesses_attain_endpoints() {
        let pair = lalonde_pn();
        let e = ev(EventKind::NotEqual(2));
        let b = pn_bounds_marginal(&pair, &e, 2).unwrap();
        let (lo, hi) = b.witnesses.unwrap();
        let pn = |q: &JointProbabilityMatrix| crate::ordinal::pn_from_joint(q, &e, 2).unwrap();
        assert!((pn(&lo) - b.lower).abs() < 1e-9);
        assert!((pn(&hi) - b.upper).abs() < 1e-9);
    }

    #[test]
    fn monotone_bounds_on_lalonde() {
        let pair = lalonde_pn();
        near(
            &pn_bounds_monotone(&pair, &ev(EventKind::NotEqual(2)), 2).unwrap(),
            0.17,
            0.17,
        );
        near(
            &pn_bounds_monotone(&pair, &ev(EventKind::Equal(0)), 1).unwrap(),
            0.31,
            0.89,
        );
        near(
            &pn_bounds_monotone(&pair, &ev(EventKind::Equal(2)), 2).unwrap(),
            0.83,
            0.83,
        );
        near(
            &pn_bounds_monotone(&pair, &ev(EventKind::Equal(1)), 1).unwrap(),
            0.11,
            0.69,
        );
        near(
            &pn_bounds_monotone(&pair, &ev(EventKind::LessThan(2)), 2).unwrap(),
            0.17,
            0.17,
        );
    }

    #[test]
    fn impossible_event_under_monotonicity() {
        let pair = lalonde_pn();
        let b = pn_bounds_monotone(&pair, &ev(EventKind::Equal(2)), 1).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
    }

    #[test]
    fn event_forms() {
        let e = |c: Vec<u8>| make_event(&EventKind::Custom(c), 5).unwrap();
        assert_eq!(
            monotone_form(&e(vec![1, 1, 0, 1, 1]), 2),
            Some(MonotoneForm::NotEqual)
        );
        assert_eq!(
            monotone_form(&e(vec![0, 1, 0, 0, 1]), 3),
            Some(MonotoneForm::Equal(1))
        );
        assert_eq!(
            monotone_form(&e(vec![1, 0, 1, 1, 0]), 3),
            Some(MonotoneForm::NotEqualTo(1))
        );
        assert_eq!(
            monotone_form(&e(vec![0, 0, 0, 1, 1]), 2),
            Some(MonotoneForm::Empty)
        );
        assert_eq!(
            monotone_form(&e(vec![1, 1, 1, 0, 0]), 2),
            Some(MonotoneForm::Full)
        );
        assert_eq!(monotone_form(&e(vec![1, 1, 0, 0, 1]), 3), None);
    }

    #[test]
    fn unsupported_event_is_reported_and_routed() {
        let pair = MarginalPair::from_probs(
            &[0.1, 0.2, 0.3, 0.4],
            &[0.25, 0.25, 0.25, 0.25],
            Conditioning::GivenTreated,
        )
        .unwrap();
        let e = make_event(&EventKind::Custom(vec![1, 1, 0, 0]), 4).unwrap();
        assert!(matches!(
            pn_bounds_monotone(&pair, &e, 3),
            Err(Error::UnsupportedEvent(_))
        ));
        let b = pn_bounds(&pair, &e, 3, AssumptionSet::Monotonicity).unwrap();
        assert_eq!(b.method, Method::LinearProgram);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn contradiction_surfaces_without_clamping() {
        // Control stochastically larger than treated: monotonicity is refuted.
        let pair = MarginalPair::from_probs(
            &[0.6, 0.2, 0.2],
            &[0.2, 0.2, 0.6],
            Conditioning::GivenTreated,
        )
        .unwrap();
        let b = pn_bounds_monotone(&pair, &ev(EventKind::NotEqual(1)), 1).unwrap();
        assert!(b.upper < 0.0);
        assert!(b.is_contradictory());
    }

    #[test]
    fn zero_evidence() {
        let pair = MarginalPair::from_probs(
            &[0.5, 0.0, 0.5],
            &[0.5, 0.0, 0.5],
            Conditioning::GivenTreated,
        )
        .unwrap();
        assert_eq!(
            pn_bounds_marginal(&pair, &ev(EventKind::Equal(0)), 1),
            Err(Error::ZeroEvidence { level: 1 })
        );
        assert_eq!(
            pn_bounds_monotone(&pair, &ev(EventKind::Equal(0)), 1),
            Err(Error::ZeroEvidence { level: 1 })
        );
    }
}
