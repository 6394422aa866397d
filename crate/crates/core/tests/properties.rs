use ordinal_attribution::oracle::{product_completion, sample_feasible, vertex_bounds};
use ordinal_attribution::{
    falsification_check, gap_sequence, identify_joint, make_event, pn_bounds_lp,
    pn_bounds_marginal, pn_bounds_monotone, pn_from_joint, pn_point, AssumptionSet, Conditioning,
    EventKind, EventSpec, JointProbabilityMatrix, MarginalPair,
};
use proptest::prelude::*;

/// Random joint matrix supported on the cells `assumptions` allows, with
/// every allowed cell strictly positive.
fn joint_strategy(
    levels: usize,
    assumptions: AssumptionSet,
) -> impl Strategy<Value = JointProbabilityMatrix> {
    prop::collection::vec(0.01f64..1.0, levels * levels).prop_map(move |raw| {
        let masked: Vec<f64> = raw
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if assumptions.allows(i / levels, i % levels) {
                    *v
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = masked.iter().sum();
        let flat: Vec<f64> = masked.iter().map(|v| v / total).collect();
        JointProbabilityMatrix::from_row_major(levels, &flat).unwrap()
    })
}

fn any_joint(assumptions: AssumptionSet) -> impl Strategy<Value = JointProbabilityMatrix> {
    (2usize..=6).prop_flat_map(move |j| joint_strategy(j, assumptions))
}

fn events(levels: usize) -> Vec<EventSpec> {
    let mut out: Vec<EventSpec> = (0..levels)
        .flat_map(|y| {
            [
                EventKind::NotEqual(y),
                EventKind::Equal(y),
                EventKind::LessThan(y),
            ]
        })
        .map(|k| make_event(&k, levels).unwrap())
        .collect();
    if levels <= 4 {
        out.extend((0..1u32 << levels).map(|bits| {
            let coeffs = (0..levels).map(|l| ((bits >> l) & 1) as u8).collect();
            make_event(&EventKind::Custom(coeffs), levels).unwrap()
        }));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pn_is_scale_invariant(q in any_joint(AssumptionSet::MarginalOnly), scale in 0.1f64..10.0) {
        let j = q.levels();
        let scaled: Vec<Vec<f64>> = q.rows().iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        for e in events(j) {
            for y in 0..j {
                let row = &scaled[y];
                let direct = e.mass(row) / row.iter().sum::<f64>();
                let pn = pn_from_joint(&q, &e, y).unwrap();
                prop_assert!((pn - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complementary_events_sum_to_one(q in any_joint(AssumptionSet::MarginalOnly)) {
        let j = q.levels();
        for e in events(j) {
            for y in 0..j {
                let a = pn_from_joint(&q, &e, y).unwrap();
                let b = pn_from_joint(&q, &e.complement(), y).unwrap();
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_events_partition(q in any_joint(AssumptionSet::MarginalOnly)) {
        let j = q.levels();
        for y in 0..j {
            let total: f64 = (0..j)
                .map(|l| pn_from_joint(&q, &make_event(&EventKind::Equal(l), j).unwrap(), y).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identification_inverts_marginalization(q in any_joint(AssumptionSet::MonotonicIncrement)) {
        let pair = q.to_marginals(Conditioning::GivenTreated).unwrap();
        prop_assert!(falsification_check(&pair).pass);
        let recovered = identify_joint(&pair).unwrap();
        prop_assert!(recovered.max_abs_diff(&q) < 1e-10);
        prop_assert!(recovered.matches(&pair, 1e-12));
        let j = q.levels();
        for e in events(j) {
            for y in 0..j {
                let a = pn_point(&pair, &e, y).unwrap();
                let b = pn_from_joint(&recovered, &e, y).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gap_sequence_telescopes(q in any_joint(AssumptionSet::MarginalOnly)) {
        let pair = q.to_marginals(Conditioning::GivenTreated).unwrap();
        let gaps = gap_sequence(&pair);
        for k in 1..pair.levels() - 1 {
            let step = gaps.at(k + 1) - gaps.at(k);
            prop_assert!((step - (pair.control().prob(k) - pair.treated().prob(k))).abs() < 1e-12);
        }
    }

    #[test]
    fn ladder_is_nested(q in any_joint(AssumptionSet::MonotonicIncrement)) {
        let pair = q.to_marginals(Conditioning::GivenTreated).unwrap();
        let j = pair.levels();
        for e in events(j) {
            for y in 0..j {
                let marginal = pn_bounds_marginal(&pair, &e, y).unwrap();
                let point = pn_point(&pair, &e, y).unwrap();
                prop_assert!(marginal.contains(point, 1e-9));
                if let Ok(mono) = pn_bounds_monotone(&pair, &e, y) {
                    prop_assert!(mono.lower >= marginal.lower - 1e-9 && mono.upper <= marginal.upper + 1e-9);
                    prop_assert!(mono.contains(point, 1e-9));
                }
            }
        }
    }

    #[test]
    fn lp_ladder_is_nested(q in (2usize..=4).prop_flat_map(|j| joint_strategy(j, AssumptionSet::MonotonicIncrement))) {
        let pair = q.to_marginals(Conditioning::GivenTreated).unwrap();
        let j = pair.levels();
        for e in events(j) {
            for y in 0..j {
                let widths: Vec<_> = AssumptionSet::LADDER
                    .iter()
                    .map(|&a| pn_bounds_lp(&pair, &e, y, a).unwrap())
                    .collect();
                for pair_of in widths.windows(2) {
                    prop_assert!(pair_of[1].lower >= pair_of[0].lower - 1e-9);
                    prop_assert!(pair_of[1].upper <= pair_of[0].upper + 1e-9);
                }
                prop_assert!(widths[2].width() <= 1e-8);
            }
        }
    }

    #[test]
    fn lp_agrees_with_vertex_enumeration(
        q in (2usize..=3).prop_flat_map(|j| joint_strategy(j, AssumptionSet::Monotonicity)),
    ) {
        let pair = q.to_marginals(Conditioning::GivenTreated).unwrap();
        let j = pair.levels();
        for a in AssumptionSet::LADDER {
            let Ok(_) = vertex_bounds(&pair, &make_event(&EventKind::Equal(0), j).unwrap(), 0, a) else {
                continue;
            };
            for e in events(j) {
                for y in 0..j {
                    let (lo, hi) = vertex_bounds(&pair, &e, y, a).unwrap();
                    let lp = pn_bounds_lp(&pair, &e, y, a).unwrap();
                    prop_assert!((lp.lower - lo).abs() < 1e-8 && (lp.upper - hi).abs() < 1e-8,
                        "{a} {e} y={y}: lp [{}, {}] vertices [{lo}, {hi}]", lp.lower, lp.upper);
                }
            }
        }
    }

    #[test]
    fn lp_witnesses_are_feasible_and_attain(q in (2usize..=5).prop_flat_map(|j| joint_strategy(j, AssumptionSet::Monotonicity))) {
        let pair = q.to_marginals(Conditioning::GivenTreated).unwrap();
        let j = pair.levels();
        for a in [AssumptionSet::MarginalOnly, AssumptionSet::Monotonicity] {
            for e in events(j) {
                for y in 0..j {
                    let b = pn_bounds_lp(&pair, &e, y, a).unwrap();
                    let (lo, hi) = b.witnesses.clone().unwrap();
                    for (w, target) in [(lo, b.lower), (hi, b.upper)] {
                        prop_assert!(w.matches(&pair, 1e-8));
                        prop_assert!(w.respects(a));
                        prop_assert!((pn_from_joint(&w, &e, y).unwrap() - target).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn product_completion_has_exact_margins(
        rows in prop::collection::vec(0.0f64..1.0, 1..6),
        cols in prop::collection::vec(0.001f64..1.0, 1..6),
    ) {
        let row_total: f64 = rows.iter().sum();
        prop_assume!(row_total > 0.01);
        let col_total: f64 = cols.iter().sum();
        let cols: Vec<f64> = cols.iter().map(|c| c * row_total / col_total).collect();
        let q = product_completion(&rows, &cols).unwrap();
        for (k, r) in rows.iter().enumerate() {
            prop_assert!((q[k].iter().sum::<f64>() - r).abs() < 1e-12);
        }
        for (l, c) in cols.iter().enumerate() {
            prop_assert!((q.iter().map(|row| row[l]).sum::<f64>() - c).abs() < 1e-12);
        }
        prop_assert!(q.iter().flatten().all(|&v| v >= 0.0));
    }
}

#[test]
fn sampled_matrices_are_valid_joints() {
    let pair = MarginalPair::from_probs(
        &[0.1, 0.2, 0.3, 0.4],
        &[0.3, 0.3, 0.25, 0.15],
        Conditioning::GivenTreated,
    )
    .unwrap();
    for a in AssumptionSet::LADDER {
        for q in sample_feasible(&pair, a, 300, 11).unwrap() {
            assert!(q.matches(&pair, 1e-7));
            assert!(q.respects(a));
            let total: f64 = q.rows().iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn incremental_samples_have_no_spread() {
    let pair = MarginalPair::from_probs(
        &[0.1, 0.2, 0.3, 0.4],
        &[0.3, 0.3, 0.25, 0.15],
        Conditioning::GivenTreated,
    )
    .unwrap();
    let e = make_event(&EventKind::Equal(1), 4).unwrap();
    let values: Vec<f64> = sample_feasible(&pair, AssumptionSet::MonotonicIncrement, 500, 5)
        .unwrap()
        .iter()
        .map(|q| pn_from_joint(q, &e, 2).unwrap())
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    assert!(var < 1e-10, "variance {var}");
    assert!((mean - pn_point(&pair, &e, 2).unwrap()).abs() < 1e-8);
}
