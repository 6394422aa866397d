//! Attribution of ordinal outcomes to a binary treatment.
//!
//! Computes the probability of necessity `pr(event on Y0 | Z = 1, Y = y)` and
//! the probability of causation `pr(event on Y0 | Y1 = y)` for an ordinal
//! outcome with `J` levels, under a ladder of assumptions on the joint law of
//! the potential outcomes `(Y1, Y0)`:
//!
//! * marginal laws only: sharp Fréchet-type bounds ([`bounds`]);
//! * monotonicity `Y0 <= Y1`: narrower closed-form bounds, or an exact
//!   linear program for arbitrary events ([`lp`]);
//! * monotonic increment `0 <= Y1 - Y0 <= 1`: point identification with a
//!   falsification check ([`identify`]).
//!
//! Every bound can be cross-checked by [`oracle`], which samples the feasible
//! set of joint matrices and constructs extremal witnesses.

pub mod bounds;
pub mod error;
pub mod identify;
pub mod ingest;
pub mod lp;
pub mod oracle;
pub mod ordinal;
pub mod pc;

pub use bounds::{pn_bounds, pn_bounds_marginal, pn_bounds_monotone, BoundsResult, Method};
pub use error::{Error, Result};
pub use identify::{
    falsification_check, gap_sequence, identify_joint, pn_point, FalsificationReport,
};
pub use lp::{build_lp, pn_bounds_lp, solve, LinearProgram, LpSolution, LpStatus, Sense};
pub use ordinal::{
    make_event, pn_from_joint, AssumptionSet, Conditioning, EventKind, EventSpec, GapSequence,
    JointProbabilityMatrix, MarginalPair, OrdinalDistribution, TOL,
};
pub use pc::{pc_bounds, pc_point};
