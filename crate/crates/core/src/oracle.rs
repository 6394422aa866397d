//! Independent checks on the bounds: explicit extremal joint matrices,
//! random exploration of the feasible set by iterative proportional fitting,
//! and exhaustive vertex enumeration for small level counts.

use std::io::Write;
use std::path::Path;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{marginal_closed_form, BoundsResult};
use crate::error::{Error, Result};
use crate::identify::falsification_check;
use crate::lp::{build_lp, pn_bounds_lp, solve, LpStatus, Sense};
use crate::ordinal::{
    make_event, pn_from_joint, AssumptionSet, EventKind, EventSpec, JointProbabilityMatrix,
    MarginalPair, TOL,
};

const IPF_MAX_SWEEPS: usize = 500;
const IPF_CONVERGENCE: f64 = 1e-10;
const NEWTON_STEPS: usize = 30;
const DRAW_ATTEMPTS: usize = 20;
const CHUNK: usize = 64;
const SHARPNESS_TOL: f64 = 1e-8;
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Lower,
    Upper,
}

/// Independence coupling `q[k][l] = rows[k] * cols[l] / S` of two
/// non-negative vectors with a common sum `S > 0`.
pub fn product_completion(rows: &[f64], cols: &[f64]) -> Result<Vec<Vec<f64>>> {
    if rows.iter().chain(cols).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument(
            "margins must be finite and non-negative".into(),
        ));
    }
    let row_total: f64 = rows.iter().sum();
    let col_total: f64 = cols.iter().sum();
    if (row_total - col_total).abs() > TOL {
        return Err(Error::MarginMismatch {
            rows: row_total,
            cols: col_total,
        });
    }
    if row_total <= 0.0 {
        return Err(Error::InvalidArgument(
            "margins must have positive mass".into(),
        ));
    }
    Ok(rows
        .iter()
        .map(|r| cols.iter().map(|c| r * c / col_total).collect())
        .collect())
}

/// A joint matrix attaining the marginal-only bound at `endpoint`.
///
/// Row `y` is filled greedily: the columns outside the event first for the
/// lower endpoint, the event columns first for the upper one. The remaining
/// rows are completed by [`product_completion`] on the residual margins.
pub fn extremal_witness_marginal(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    endpoint: Endpoint,
) -> Result<JointProbabilityMatrix> {
    let mass = pair.evidence_mass(y)?;
    if event.levels() != pair.levels() {
        return Err(Error::LevelMismatch {
            expected: pair.levels(),
            found: event.levels(),
        });
    }
    let levels = pair.levels();
    let control = pair.control().probs();
    let preferred = match endpoint {
        Endpoint::Lower => 0,
        Endpoint::Upper => 1,
    };
    let order = (0..levels)
        .filter(|&l| event.coeffs()[l] == preferred)
        .chain((0..levels).filter(|&l| event.coeffs()[l] != preferred));

    let mut row_y = vec![0.0; levels];
    let mut remaining = mass;
    for l in order {
        let take = remaining.min(control[l]);
        row_y[l] = take;
        remaining -= take;
    }
    if remaining > TOL {
        return Err(Error::Construction(format!(
            "row {y} keeps {remaining} unallocated mass"
        )));
    }

    let residual_rows: Vec<f64> = (0..levels)
        .filter(|&k| k != y)
        .map(|k| pair.treated().prob(k))
        .collect();
    let residual_cols: Vec<f64> = control
        .iter()
        .zip(&row_y)
        .map(|(c, r)| (c - r).max(0.0))
        .collect();
    let rest = if residual_rows.iter().sum::<f64>() > 0.0 {
        product_completion(&residual_rows, &residual_cols)?
    } else {
        vec![vec![0.0; levels]; levels - 1]
    };
    let mut rest = rest.into_iter();
    let entries: Vec<Vec<f64>> = (0..levels)
        .map(|k| {
            if k == y {
                row_y.clone()
            } else {
                rest.next().expect("one residual row per level")
            }
        })
        .collect();
    let witness = JointProbabilityMatrix::new(entries)?;

    let (lower, upper) = marginal_closed_form(pair, event, mass);
    let target = match endpoint {
        Endpoint::Lower => lower,
        Endpoint::Upper => upper,
    };
    let attained = pn_from_joint(&witness, event, y)?;
    if (attained - target).abs() > TOL || !witness.matches(pair, TOL) {
        return Err(Error::Construction(format!(
            "witness attains {attained}, bound is {target}"
        )));
    }
    Ok(witness)
}

fn check_support(pair: &MarginalPair, assumptions: AssumptionSet) -> Result<()> {
    match assumptions {
        AssumptionSet::MarginalOnly => Ok(()),
        AssumptionSet::Monotonicity => {
            let gaps = pair.gaps();
            match (1..pair.levels()).find(|&k| gaps.at(k) < -TOL) {
                Some(k) => Err(Error::Sampling(format!(
                    "no lower-triangular joint exists: gap at level {k} is {}",
                    gaps.at(k)
                ))),
                None => Ok(()),
            }
        }
        AssumptionSet::MonotonicIncrement => {
            let report = falsification_check(pair);
            match report.first_violation() {
                Some(b) => Err(Error::Sampling(format!(
                    "feasible set is empty: falsification fails at k={}",
                    b.k
                ))),
                None => Ok(()),
            }
        }
    }
}

/// One IPF run from a random start on the open cells of `fit`; `None` if it
/// fails to converge.
///
/// IPF converges only linearly, and very slowly when a small cell nearly
/// disconnects the support. If the sweep budget runs out, the same scaling
/// equations (row and column multipliers of the starting matrix) are
/// finished by Newton's method on the log multipliers, which reaches the
/// same fixed point.
fn ipf_draw(rng: &mut ChaCha8Rng, fit: &Peeled, scale: &[f64]) -> Option<Vec<Vec<f64>>> {
    let levels = fit.rows.len();
    let mut q: Vec<Vec<f64>> = (0..levels)
        .map(|k| {
            (0..levels)
                .map(|l| {
                    if fit.open[k][l] {
                        rng.sample::<f64, _>(Exp1)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let fitter = Fitter::new(fit, scale);
    let mut converged = false;
    for _ in 0..IPF_MAX_SWEEPS {
        if fitter.sweep(&mut q)? <= IPF_CONVERGENCE {
            converged = true;
            break;
        }
    }
    if !converged && !fitter.newton(&mut q)? {
        return None;
    }
    for (row, fixed) in q.iter_mut().zip(&fit.fixed) {
        for (v, f) in row.iter_mut().zip(fixed) {
            *v += f;
        }
    }
    Some(q)
}

#[derive(Clone, Copy)]
enum Multiplier {
    Row(usize),
    Col(usize),
}

struct Fitter<'a> {
    fit: &'a Peeled,
    /// Full row masses; the convergence test is relative to them.
    scale: &'a [f64],
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Unknowns of the Newton system: every active row and all active
    /// columns but one per connected block, whose multiplier is pinned
    /// (multipliers are only determined up to a shift within a block).
    unknowns: Vec<Multiplier>,
}

impl<'a> Fitter<'a> {
    fn new(fit: &'a Peeled, scale: &'a [f64]) -> Self {
        let levels = fit.rows.len();
        let rows: Vec<usize> = (0..levels)
            .filter(|&k| fit.open[k].contains(&true))
            .collect();
        let cols: Vec<usize> = (0..levels)
            .filter(|&l| fit.open.iter().any(|r| r[l]))
            .collect();
        // Union-find over rows 0..J and columns J..2J.
        let mut parent: Vec<usize> = (0..2 * levels).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for k in 0..levels {
            for l in 0..levels {
                if fit.open[k][l] {
                    let (a, b) = (root(&mut parent, k), root(&mut parent, levels + l));
                    parent[a] = b;
                }
            }
        }
        let mut pinned_blocks = Vec::new();
        let mut unknowns: Vec<Multiplier> = rows.iter().map(|&k| Multiplier::Row(k)).collect();
        for &l in &cols {
            let block = root(&mut parent, levels + l);
            if pinned_blocks.contains(&block) {
                unknowns.push(Multiplier::Col(l));
            } else {
                pinned_blocks.push(block);
            }
        }
        Self {
            fit,
            scale,
            rows,
            cols,
            unknowns,
        }
    }

    /// Row scaling then column scaling; returns the relative row error.
    fn sweep(&self, q: &mut [Vec<f64>]) -> Option<f64> {
        for &k in &self.rows {
            let sum: f64 = q[k].iter().sum();
            if sum <= 0.0 {
                return None;
            }
            let factor = self.fit.rows[k] / sum;
            q[k].iter_mut().for_each(|v| *v *= factor);
        }
        for &l in &self.cols {
            let sum: f64 = q.iter().map(|row| row[l]).sum();
            if sum <= 0.0 {
                return None;
            }
            let factor = self.fit.cols[l] / sum;
            q.iter_mut().for_each(|row| row[l] *= factor);
        }
        Some(self.row_error(q))
    }

    fn row_error(&self, q: &[Vec<f64>]) -> f64 {
        self.rows
            .iter()
            .map(|&k| (q[k].iter().sum::<f64>() - self.fit.rows[k]).abs() / self.scale[k])
            .fold(0.0, f64::max)
    }

    fn residual(&self, q: &[Vec<f64>], m: Multiplier) -> f64 {
        match m {
            Multiplier::Row(k) => q[k].iter().sum::<f64>() - self.fit.rows[k],
            Multiplier::Col(l) => q.iter().map(|row| row[l]).sum::<f64>() - self.fit.cols[l],
        }
    }

    fn residual_norm(&self, q: &[Vec<f64>]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|&k| self.residual(q, Multiplier::Row(k)).abs());
        let cols = self
            .cols
            .iter()
            .map(|&l| self.residual(q, Multiplier::Col(l)).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// Damped Newton iterations; `Some(true)` once the sweep test passes.
    fn newton(&self, q: &mut Vec<Vec<f64>>) -> Option<bool> {
        let n = self.unknowns.len();
        for _ in 0..NEWTON_STEPS {
            let mut system = vec![vec![0.0; n + 1]; n];
            for (i, &eq) in self.unknowns.iter().enumerate() {
                for (j, &var) in self.unknowns.iter().enumerate() {
                    system[i][j] = match (eq, var) {
                        (Multiplier::Row(k), Multiplier::Row(r)) if k == r => q[k].iter().sum(),
                        (Multiplier::Col(l), Multiplier::Col(c)) if l == c => {
                            q.iter().map(|row| row[l]).sum()
                        }
                        (Multiplier::Row(k), Multiplier::Col(l))
                        | (Multiplier::Col(l), Multiplier::Row(k)) => q[k][l],
                        _ => 0.0,
                    };
                }
                system[i][n] = -self.residual(q, eq);
            }
            let step = solve_square(system)?;
            let mut row_step = vec![0.0; q.len()];
            let mut col_step = vec![0.0; q.len()];
            for (&m, &d) in self.unknowns.iter().zip(&step) {
                match m {
                    Multiplier::Row(k) => row_step[k] = d,
                    Multiplier::Col(l) => col_step[l] = d,
                }
            }
            let before = self.residual_norm(q);
            let mut t = 1.0;
            loop {
                let trial: Vec<Vec<f64>> = q
                    .iter()
                    .enumerate()
                    .map(|(k, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(l, v)| v * (t * (row_step[k] + col_step[l])).exp())
                            .collect()
                    })
                    .collect();
                if self.residual_norm(&trial) < before || t < 1e-6 {
                    *q = trial;
                    break;
                }
                t *= 0.5;
            }
            if self.sweep(q)? <= IPF_CONVERGENCE {
                return Some(true);
            }
        }
        Some(false)
    }
}

/// Cells that carry positive mass in at least one feasible joint matrix.
///
/// Cells allowed by the assumptions but forced to zero by the margins sit on
/// the boundary of the feasible set; fitting them would only converge
/// sub-linearly, so they are excluded from the start.
fn free_support(pair: &MarginalPair, assumptions: AssumptionSet) -> Result<Vec<Vec<bool>>> {
    let levels = pair.levels();
    let base = build_lp(
        pair,
        &make_event(&EventKind::Equal(0), levels)?,
        0,
        assumptions,
        Sense::Max,
    );
    let mut support = vec![vec![false; levels]; levels];
    for k in 0..levels {
        for l in 0..levels {
            if !assumptions.allows(k, l)
                || pair.treated().prob(k) == 0.0
                || pair.control().prob(l) == 0.0
            {
                continue;
            }
            let mut lp = base.clone();
            lp.objective.iter_mut().for_each(|c| *c = 0.0);
            lp.objective[k * levels + l] = 1.0;
            let solution = solve(&lp)?;
            if solution.status != LpStatus::Optimal {
                return Err(Error::Sampling(format!(
                    "feasible set is empty under {assumptions}"
                )));
            }
            support[k][l] = solution.value > SUPPORT_TOL;
        }
    }
    Ok(support)
}

/// Margins left to fit after settling every forced cell.
struct Peeled {
    /// Settled cells.
    fixed: Vec<Vec<f64>>,
    /// Cells still free.
    open: Vec<Vec<bool>>,
    /// Residual margins for the open cells.
    rows: Vec<f64>,
    cols: Vec<f64>,
}

/// Repeatedly settles a row or column that has exactly one open cell: that
/// cell must carry the whole residual margin. When the support, read as a
/// bipartite graph between rows and columns, has no cycle this settles every
/// cell and the feasible set is a single matrix, the point IPF would only
/// approach slowly when it has small cells.
fn peel_forced(rows: &[f64], cols: &[f64], support: &[Vec<bool>]) -> Peeled {
    let levels = rows.len();
    let mut p = Peeled {
        fixed: vec![vec![0.0; levels]; levels],
        open: support.to_vec(),
        rows: rows.to_vec(),
        cols: cols.to_vec(),
    };
    let single = |cells: &mut dyn Iterator<Item = usize>| match (cells.next(), cells.next()) {
        (Some(i), None) => Some(i),
        _ => None,
    };
    loop {
        let leaf = (0..levels)
            .find_map(|k| {
                single(&mut (0..levels).filter(|&l| p.open[k][l])).map(|l| (k, l, p.rows[k]))
            })
            .or_else(|| {
                (0..levels).find_map(|l| {
                    single(&mut (0..levels).filter(|&k| p.open[k][l])).map(|k| (k, l, p.cols[l]))
                })
            });
        let Some((k, l, value)) = leaf else {
            return p;
        };
        let value = value.max(0.0);
        p.fixed[k][l] = value;
        p.rows[k] -= value;
        p.cols[l] -= value;
        p.open[k][l] = false;
    }
}

/// Draws `n` joint matrices from the feasible set under `assumptions`.
///
/// Each draw starts from a symmetric Dirichlet(1) matrix on the cells that
/// can carry mass and is fitted to the margins by iterative proportional
/// fitting. Draws are generated in fixed-size chunks, each with its own
/// ChaCha stream derived from `seed`, so the output does not depend on the
/// thread count. When the margins pin down the matrix (acyclic support, as
/// always under the incremental assumption) every draw is that matrix.
pub fn sample_feasible(
    pair: &MarginalPair,
    assumptions: AssumptionSet,
    n: usize,
    seed: u64,
) -> Result<Vec<JointProbabilityMatrix>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    check_support(pair, assumptions)?;
    let support = free_support(pair, assumptions)?;
    let rows = pair.treated().probs();
    let cols = pair.control().probs();
    let fit = peel_forced(rows, cols, &support);
    if !fit.open.iter().flatten().any(|&c| c) {
        let q = JointProbabilityMatrix::new(fit.fixed)?;
        return Ok(vec![q; n]);
    }
    let chunks = n.div_ceil(CHUNK);
    let drawn: Vec<Vec<JointProbabilityMatrix>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(n - chunk * CHUNK);
            (0..count)
                .map(|_| {
                    let q = (0..DRAW_ATTEMPTS)
                        .find_map(|_| ipf_draw(&mut rng, &fit, rows))
                        .ok_or_else(|| {
                            Error::Sampling(format!(
                                "iterative proportional fitting failed {DRAW_ATTEMPTS} times in a row"
                            ))
                        })?;
                    JointProbabilityMatrix::new(q)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(drawn.into_iter().flatten().collect())
}

/// Findings of an oracle run against claimed bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub contained: bool,
    pub max_violation: f64,
    pub sample_min: f64,
    pub sample_max: f64,
    pub witness_lower: f64,
    pub witness_upper: f64,
    pub witnesses_within_bounds: bool,
    pub sharpness_gap_lower: f64,
    pub sharpness_gap_upper: f64,
    pub sharp: bool,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub sampled_values: Vec<f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.contained && self.witnesses_within_bounds && self.sharp
    }

    /// Writes the sampled values as a one-column CSV.
    pub fn write_samples_csv(&self, path: &Path) -> Result<()> {
        let io_err = |e: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(file, "value").map_err(io_err)?;
        for v in &self.sampled_values {
            writeln!(file, "{v}").map_err(io_err)?;
        }
        file.flush().map_err(io_err)
    }
}

/// Samples the feasible set, checks that every sampled value lies inside
/// `bounds`, and measures how far each endpoint is from the value attained by
/// an extremal witness (explicit construction for marginal-only bounds, LP
/// optima otherwise).
pub fn verify_bounds(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    assumptions: AssumptionSet,
    bounds: &BoundsResult,
    n: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let samples = sample_feasible(pair, assumptions, n, seed)?;
    let values = samples
        .iter()
        .map(|q| pn_from_joint(q, event, y))
        .collect::<Result<Vec<f64>>>()?;
    let max_violation = values
        .iter()
        .map(|&v| (bounds.lower - v).max(v - bounds.upper).max(0.0))
        .fold(0.0, f64::max);

    let (lo, hi) = match assumptions {
        AssumptionSet::MarginalOnly => (
            extremal_witness_marginal(pair, event, y, Endpoint::Lower)?,
            extremal_witness_marginal(pair, event, y, Endpoint::Upper)?,
        ),
        _ => pn_bounds_lp(pair, event, y, assumptions)?
            .witnesses
            .expect("LP bounds carry witnesses"),
    };
    let feasible = |q: &JointProbabilityMatrix| q.matches(pair, 1e-8) && q.respects(assumptions);
    let witness_lower = pn_from_joint(&lo, event, y)?;
    let witness_upper = pn_from_joint(&hi, event, y)?;
    let sharpness_gap_lower = (bounds.lower - witness_lower).abs();
    let sharpness_gap_upper = (bounds.upper - witness_upper).abs();
    Ok(VerificationReport {
        contained: max_violation <= TOL,
        max_violation,
        sample_min: values.iter().copied().fold(f64::INFINITY, f64::min),
        sample_max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        witness_lower,
        witness_upper,
        witnesses_within_bounds: feasible(&lo)
            && feasible(&hi)
            && bounds.contains(witness_lower, TOL)
            && bounds.contains(witness_upper, TOL),
        sharpness_gap_lower,
        sharpness_gap_upper,
        sharp: sharpness_gap_lower <= SHARPNESS_TOL && sharpness_gap_upper <= SHARPNESS_TOL,
        samples: values.len(),
        seed,
        sampled_values: values,
    })
}

/// Exact bounds by enumerating every basic feasible solution of the
/// marginal system restricted to the allowed cells. Exponential in `J`;
/// limited to `J <= 4`.
pub fn vertex_bounds(
    pair: &MarginalPair,
    event: &EventSpec,
    y: usize,
    assumptions: AssumptionSet,
) -> Result<(f64, f64)> {
    let levels = pair.levels();
    if levels > 4 {
        return Err(Error::InvalidArgument(format!(
            "vertex enumeration supports at most 4 levels, got {levels}"
        )));
    }
    let mass = pair.evidence_mass(y)?;
    let cells: Vec<(usize, usize)> = (0..levels)
        .flat_map(|k| (0..levels).map(move |l| (k, l)))
        .filter(|&(k, l)| assumptions.allows(k, l))
        .collect();
    let mut system: Vec<Vec<f64>> = Vec::new();
    for k in 0..levels {
        let mut row: Vec<f64> = cells
            .iter()
            .map(|&(a, _)| f64::from(u8::from(a == k)))
            .collect();
        row.push(pair.treated().prob(k));
        system.push(row);
    }
    for l in 0..levels {
        let mut row: Vec<f64> = cells
            .iter()
            .map(|&(_, b)| f64::from(u8::from(b == l)))
            .collect();
        row.push(pair.control().prob(l));
        system.push(row);
    }
    let independent = row_reduce(system, cells.len()).ok_or(Error::Infeasible(assumptions))?;
    let rank = independent.len();

    let mut best: Option<(f64, f64)> = None;
    for basis in (0..cells.len()).combinations(rank) {
        let square: Vec<Vec<f64>> = independent
            .iter()
            .map(|row| {
                let mut r: Vec<f64> = basis.iter().map(|&j| row[j]).collect();
                r.push(row[cells.len()]);
                r
            })
            .collect();
        let Some(x) = solve_square(square) else {
            continue;
        };
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let value: f64 = basis
            .iter()
            .zip(&x)
            .filter(|(&j, _)| cells[j].0 == y && event.coeffs()[cells[j].1] == 1)
            .map(|(_, v)| v.max(0.0))
            .sum::<f64>()
            / mass;
        best = Some(match best {
            None => (value, value),
            Some((lo, hi)) => (lo.min(value), hi.max(value)),
        });
    }
    best.ok_or(Error::Infeasible(assumptions))
}

/// Gaussian elimination on an augmented system; returns a full-rank set of
/// rows, or `None` if the system is inconsistent.
fn row_reduce(mut rows: Vec<Vec<f64>>, cols: usize) -> Option<Vec<Vec<f64>>> {
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len())
            .filter(|&i| rows[i][c].abs() > 1e-12)
            .max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs()))
        else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank {
                let f = row[c] / pivot[c];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[cols].abs() > 1e-9) {
        return None;
    }
    rows.truncate(rank);
    Some(rows)
}

/// Solves a square augmented system with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            if f != 0.0 {
                let pivot = a[c].clone();
                a[i].iter_mut().zip(&pivot).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    Some(x)
}
