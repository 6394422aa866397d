//! Sharp bounds as linear programs over the joint matrix, solved by a dense
//! two-phase simplex method with Bland's rule and certified through the dual.
//!
//! Variables are the `J^2` cells of the joint matrix in row-major order
//! (`index = k * J + l`). Constraints are equalities: `J - 1` row sums,
//! `J - 1` column sums, the total mass, then one row `q[k][l] = 0` for every
//! cell the assumption set forbids.

use serde::Serialize;

use crate::bounds::{BoundsResult, Method};
use crate::error::{Error, Result};
use crate::identify::falsification_check;
use crate::ordinal::{AssumptionSet, EventSpec, JointProbabilityMatrix, MarginalPair};

const PIVOT_TOL: f64 = 1e-10;
const REDUCED_COST_TOL: f64 = 1e-10;
const INFEASIBILITY_TOL: f64 = 1e-8;
const CERTIFICATE_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Max,
    Min,
}

/// `optimize objective . q  s.t.  constraints q = rhs, q >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub sense: Sense,
    pub row_labels: Vec<String>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    /// JSON dump for cross-checks with external solvers.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("linear program serializes")
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::Dimension("linear program has no variables".into()));
        }
        if self.rhs.len() != self.constraints.len() {
            return Err(Error::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                self.constraints.len(),
                self.rhs.len()
            )));
        }
        if let Some((i, row)) = self
            .constraints
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != n)
        {
            return Err(Error::Dimension(format!(
                "constraint row {i} has {} columns, expected {n}",
                row.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Dual evidence that an optimal point is optimal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub dual_value: f64,
    pub duality_gap: f64,
    pub max_dual_infeasibility: f64,
    pub max_complementarity: f64,
    pub primal_residual: f64,
}

/// Solver output. `value`, `point` and `duals` are meaningful only when
/// `status` is [`LpStatus::Optimal`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub point: Vec<f64>,
    pub duals: Vec<f64>,
    pub certificate: Option<DualCertificate>,
}

impl LpSolution {
    fn without_optimum(status: LpStatus) -> Self {
        Self {
            status,
            value: f64::NAN,
            point: Vec::new(),
            duals: Vec::new(),
            certificate: None,
        }
    }
}

/// Objective `sum_l c_l q[y][l]` subject to the marginal and assumption rows.
pub fn build_lp(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    assumptions: AssumptionSet,
    sense: Sense,
) -> LinearProgram {
    let levels = pair.levels();
    let n = levels * levels;
    let idx = |k: usize, l: usize| k * levels + l;
    let mut objective = vec![0.0; n];
    for l in 0..levels {
        objective[idx(y, l)] = event.coeff(l);
    }
    let mut constraints = Vec::new();
    let mut rhs = Vec::new();
    let mut row_labels = Vec::new();
    for k in 0..levels - 1 {
        let mut row = vec![0.0; n];
        (0..levels).for_each(|l| row[idx(k, l)] = 1.0);
        constraints.push(row);
        rhs.push(pair.treated().prob(k));
        row_labels.push(format!("row_sum[{k}]"));
    }
    for l in 0..levels - 1 {
        let mut row = vec![0.0; n];
        (0..levels).for_each(|k| row[idx(k, l)] = 1.0);
        constraints.push(row);
        rhs.push(pair.control().prob(l));
        row_labels.push(format!("col_sum[{l}]"));
    }
    constraints.push(vec![1.0; n]);
    rhs.push(1.0);
    row_labels.push("total".into());
    for k in 0..levels {
        for l in 0..levels {
            if !assumptions.allows(k, l) {
                let mut row = vec![0.0; n];
                row[idx(k, l)] = 1.0;
                constraints.push(row);
                rhs.push(0.0);
                row_labels.push(format!("zero[{k}][{l}]"));
            }
        }
    }
    LinearProgram {
        objective,
        constraints,
        rhs,
        sense,
        row_labels,
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    num_structural: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                self.rhs[i] -= factor * pivot_rhs;
                self.rows[i][col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Maximizes `cost . x` from the current basis. Columns at or beyond
    /// `enter_limit` never enter.
    fn run(&mut self, cost: &[f64], enter_limit: usize) -> Result<PhaseEnd> {
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(cost);
            let Some(col) = (0..enter_limit).find(|&j| d[j] > REDUCED_COST_TOL) else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                if !self.active[i] || self.rows[i][col] <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / self.rows[i][col];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12
                            || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return Ok(PhaseEnd::Unbounded),
            }
        }
        Err(Error::Certificate(format!(
            "simplex did not terminate within {MAX_PIVOTS} pivots"
        )))
    }

    fn point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural && self.active[i] {
                x[b] = self.rhs[i];
            }
        }
        x
    }

    /// `c_B^T B^{-1}`, read off the artificial columns.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.rows.len();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|r| cost[self.basis[r]] * self.rows[r][self.num_structural + i])
                    .sum()
            })
            .collect()
    }
}

/// Solves a linear program with the two-phase simplex method.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();
    let sign = match lp.sense {
        Sense::Max => 1.0,
        Sense::Min => -1.0,
    };
    let cost_max: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();

    // Normalize rows to non-negative right-hand sides, then append an
    // identity block of artificial columns.
    let row_sign: Vec<f64> = lp
        .rhs
        .iter()
        .map(|&b| if b < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let rows: Vec<Vec<f64>> = lp
        .constraints
        .iter()
        .zip(&row_sign)
        .enumerate()
        .map(|(i, (row, s))| {
            let mut full: Vec<f64> = row.iter().map(|a| s * a).collect();
            full.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
            full
        })
        .collect();
    let mut tableau = Tableau {
        rows,
        rhs: lp.rhs.iter().zip(&row_sign).map(|(b, s)| s * b).collect(),
        basis: (n..n + m).collect(),
        active: vec![true; m],
        num_structural: n,
    };

    let phase_one_cost: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { -1.0 }).collect();
    tableau.run(&phase_one_cost, n + m)?;
    let infeasibility: f64 = tableau
        .basis
        .iter()
        .zip(&tableau.rhs)
        .filter(|(&b, _)| b >= n)
        .map(|(_, r)| r.abs())
        .sum();
    if infeasibility > INFEASIBILITY_TOL {
        return Ok(LpSolution::without_optimum(LpStatus::Infeasible));
    }
    for i in 0..m {
        if tableau.basis[i] < n {
            continue;
        }
        let candidate = (0..n)
            .filter(|&j| tableau.rows[i][j].abs() > PIVOT_TOL)
            .max_by(|&a, &b| {
                tableau.rows[i][a]
                    .abs()
                    .total_cmp(&tableau.rows[i][b].abs())
            });
        match candidate {
            Some(j) => tableau.pivot(i, j),
            None => tableau.active[i] = false,
        }
    }

    let mut phase_two_cost = cost_max.clone();
    phase_two_cost.extend(std::iter::repeat_n(0.0, m));
    if let PhaseEnd::Unbounded = tableau.run(&phase_two_cost, n)? {
        return Ok(LpSolution::without_optimum(LpStatus::Unbounded));
    }

    let point = tableau.point();
    let duals: Vec<f64> = tableau
        .duals(&phase_two_cost)
        .iter()
        .zip(&row_sign)
        .map(|(y, s)| s * y)
        .collect();
    let value_max: f64 = cost_max.iter().zip(&point).map(|(c, x)| c * x).sum();
    let certificate = certify(lp, &cost_max, &point, &duals, value_max)?;
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: sign * value_max,
        point,
        duals: duals.iter().map(|y| sign * y).collect(),
        certificate: Some(certificate),
    })
}

/// Checks primal feasibility, dual feasibility `A^T y >= c`, a zero duality
/// gap and complementary slackness for the maximization form.
fn certify(
    lp: &LinearProgram,
    cost_max: &[f64],
    point: &[f64],
    duals: &[f64],
    value_max: f64,
) -> Result<DualCertificate> {
    let n = lp.num_vars();
    let primal_residual = lp
        .constraints
        .iter()
        .zip(&lp.rhs)
        .map(|(row, b)| (row.iter().zip(point).map(|(a, x)| a * x).sum::<f64>() - b).abs())
        .chain(point.iter().map(|&x| (-x).max(0.0)))
        .fold(0.0, f64::max);
    let mut max_dual_infeasibility: f64 = 0.0;
    let mut max_complementarity: f64 = 0.0;
    for j in 0..n {
        let slack: f64 = lp
            .constraints
            .iter()
            .zip(duals)
            .map(|(row, y)| row[j] * y)
            .sum::<f64>()
            - cost_max[j];
        max_dual_infeasibility = max_dual_infeasibility.max(-slack);
        max_complementarity = max_complementarity.max((point[j] * slack).abs());
    }
    let dual_value: f64 = lp.rhs.iter().zip(duals).map(|(b, y)| b * y).sum();
    let certificate = DualCertificate {
        dual_value,
        duality_gap: (dual_value - value_max).abs(),
        max_dual_infeasibility,
        max_complementarity,
        primal_residual,
    };
    if certificate.primal_residual > CERTIFICATE_TOL
        || certificate.max_dual_infeasibility > CERTIFICATE_TOL
        || certificate.max_complementarity > CERTIFICATE_TOL
        || certificate.duality_gap > CERTIFICATE_TOL
    {
        return Err(Error::Certificate(format!("{certificate:?}")));
    }
    Ok(certificate)
}

/// Sharp bounds on `pr(event | Y1 = y)` by solving the minimization and
/// maximization programs on the joint matrix.
pub fn pn_bounds_lp(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    assumptions: AssumptionSet,
) -> Result<BoundsResult> {
    if event.levels() != pair.levels() {
        return Err(Error::LevelMismatch {
            expected: pair.levels(),
            found: event.levels(),
        });
    }
    let mass = pair.evidence_mass(y)?;
    let mut ends = Vec::with_capacity(2);
    for sense in [Sense::Min, Sense::Max] {
        let solution = solve(&build_lp(pair, event, y, assumptions, sense))?;
        match solution.status {
            LpStatus::Optimal => ends.push(solution),
            LpStatus::Infeasible => return Err(Error::Infeasible(assumptions)),
            LpStatus::Unbounded => return Err(Error::Unbounded),
        }
    }
    let witness = |s: &LpSolution| JointProbabilityMatrix::from_row_major(pair.levels(), &s.point);
    let lower = (ends[0].value / mass).clamp(0.0, 1.0);
    let upper = (ends[1].value / mass).clamp(0.0, 1.0);
    Ok(BoundsResult {
        lower,
        upper,
        assumptions,
        method: Method::LinearProgram,
        witnesses: Some((witness(&ends[0])?, witness(&ends[1])?)),
    })
}

/// Whether LP infeasibility under the incremental assumption coincides with
/// the falsification check, as it must.
pub fn infeasibility_agrees_with_falsification(pair: &MarginalPair) -> Result<bool> {
    let event = crate::ordinal::make_event(&crate::ordinal::EventKind::Equal(0), pair.levels())?;
    let lp = build_lp(
        pair,
        &event,
        0,
        AssumptionSet::MonotonicIncrement,
        Sense::Max,
    );
    let infeasible = solve(&lp)?.status == LpStatus::Infeasible;
    Ok(infeasible != falsification_check(pair).pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::{make_event, Conditioning, EventKind};

    fn lp(
        objective: Vec<f64>,
        constraints: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        sense: Sense,
    ) -> LinearProgram {
        let row_labels = (0..rhs.len()).map(|i| i.to_string()).collect();
        LinearProgram {
            objective,
            constraints,
            rhs,
            sense,
            row_labels,
        }
    }

    #[test]
    fn trivial_maximum() {
        let sol = solve(&lp(
            vec![1.0, 0.0],
            vec![vec![1.0, 1.0]],
            vec![1.0],
            Sense::Max,
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.point[0] - 1.0).abs() < 1e-12);
        let cert = sol.certificate.unwrap();
        assert!(cert.duality_gap < 1e-12);
    }

    #[test]
    fn textbook_program() {
        // max 3x + 5y, x + s1 = 4, 2y + s2 = 12, 3x + 2y + s3 = 18 -> 36 at (2, 6).
        let sol = solve(&lp(
            vec![3.0, 5.0, 0.0, 0.0, 0.0],
            vec![
                vec![1.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0, 1.0, 0.0],
                vec![3.0, 2.0, 0.0, 0.0, 1.0],
            ],
            vec![4.0, 12.0, 18.0],
            Sense::Max,
        ))
        .unwrap();
        assert!((sol.value - 36.0).abs() < 1e-9);
        assert!((sol.point[0] - 2.0).abs() < 1e-9);
        assert!((sol.point[1] - 6.0).abs() < 1e-9);
        let sol = solve(&lp(
            vec![1.0, 1.0, 0.0, 0.0, 0.0],
            vec![
                vec![1.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0, 1.0, 0.0],
                vec![3.0, 2.0, 0.0, 0.0, 1.0],
            ],
            vec![4.0, 12.0, 18.0],
            Sense::Min,
        ))
        .unwrap();
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // -x - y = -1 stated twice; min x.
        let sol = solve(&lp(
            vec![1.0, 0.0],
            vec![vec![-1.0, -1.0], vec![-1.0, -1.0]],
            vec![-1.0, -1.0],
            Sense::Min,
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.value.abs() < 1e-12);
        assert!((sol.point[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // Margins summing to 2 against a total mass of 1.
        let pair_rows = vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![1.0; 4],
        ];
        let sol = solve(&lp(
            vec![1.0, 0.0, 0.0, 0.0],
            pair_rows,
            vec![2.0, 2.0, 1.0],
            Sense::Max,
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let sol = solve(&lp(
            vec![1.0, 0.0],
            vec![vec![1.0, -1.0]],
            vec![0.0],
            Sense::Max,
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            solve(&lp(vec![1.0, 0.0], vec![vec![1.0]], vec![1.0], Sense::Max)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            solve(&lp(vec![1.0], vec![vec![1.0]], vec![1.0, 2.0], Sense::Max)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn constraint_counts() {
        let pair = MarginalPair::from_probs(
            &[0.2, 0.3, 0.5],
            &[0.3, 0.3, 0.4],
            Conditioning::GivenTreated,
        )
        .unwrap();
        let e = make_event(&EventKind::NotEqual(2), 3).unwrap();
        let count = |a| build_lp(&pair, &e, 2, a, Sense::Max).num_rows();
        assert_eq!(count(AssumptionSet::MarginalOnly), 5);
        assert_eq!(count(AssumptionSet::Monotonicity), 8);
        assert_eq!(count(AssumptionSet::MonotonicIncrement), 9);
        let prog = build_lp(&pair, &e, 2, AssumptionSet::MarginalOnly, Sense::Max);
        assert_eq!(prog.num_vars(), 9);
        assert_eq!(&prog.objective[6..9], &[1.0, 1.0, 0.0]);
        assert!(prog.objective[..6].iter().all(|&c| c == 0.0));
        assert!(prog.to_json().contains("\"row_labels\""));
    }
}
