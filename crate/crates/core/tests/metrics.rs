mod common;

use common::*;
use ggm_core::*;
use proptest::prelude::*;

fn random_set(p: usize, rng: &mut TestRng) -> EdgeSet {
    let mut s = EdgeSet::empty(p);
    for (i, j) in pairs(p) {
        if rng.uniform() < 0.5 {
            s.insert(i, j);
        }
    }
    s
}

fn brute_confusion(p: usize, truth: &EdgeSet, inferred: &EdgeSet) -> [usize; 4] {
    let mut c = [0usize; 4];
    for i in 0..p {
        for j in i + 1..p {
            let (t, d) = (truth.contains(i, j), inferred.contains(i, j));
            let slot = match (t, d) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            c[slot] += 1;
        }
    }
    c
}

#[test]
fn confusion_matches_pair_enumeration() {
    for seed in 0..200 {
        let mut rng = TestRng::new(seed);
        let truth = random_set(5, &mut rng);
        let inferred = random_set(5, &mut rng);
        let c = confusion(&truth, &inferred);
        assert_eq!(
            [c.true_pos, c.false_pos, c.true_neg, c.false_neg],
            brute_confusion(5, &truth, &inferred),
            "seed {seed}"
        );
        assert_eq!(c.total(), 10);
    }
}

/// ROC vertices from every distinct threshold `θ`, counting `v ≤ θ`.
fn exhaustive_roc(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = positive.iter().filter(|&&b| b).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut thresholds = scores.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut out = vec![(0.0, 0.0)];
    for &theta in &thresholds {
        let tp = scores.iter().zip(positive).filter(|(&v, &b)| b && v <= theta).count() as f64;
        let fp = scores.iter().zip(positive).filter(|(&v, &b)| !b && v <= theta).count() as f64;
        out.push((fp / n_neg, tp / n_pos));
    }
    out
}

#[test]
fn roc_matches_threshold_sweep_on_worked_model() {
    let model = worked_model();
    for seed in 0..5 {
        let data = sample_mvn(&model.covariance, 150, seed).unwrap();
        let raw = raw_pvalues(&data, DfRule::NMinusP).unwrap();
        for kind in ProcedureKind::ALL {
            let adj = kind.apply(&raw);
            let curve = roc_curve(&adj, &model.edges).unwrap();
            assert_eq!(
                curve.points,
                exhaustive_roc(adj.values(), &model.edges.indicator()),
                "{kind}"
            );
        }
    }
}

#[test]
fn label_inversion_symmetry() {
    for seed in 0..50 {
        let mut rng = TestRng::new(seed);
        let scores: Vec<f64> = (0..40).map(|_| rng.uniform()).collect();
        let mut positive: Vec<bool> = (0..40).map(|_| rng.uniform() < 0.3).collect();
        positive[0] = true;
        positive[1] = false;
        let flipped: Vec<f64> = scores.iter().map(|v| 1.0 - v).collect();
        let a = auc(&RocCurve::from_scores(&scores, &positive).unwrap());
        let b = auc(&RocCurve::from_scores(&flipped, &positive).unwrap());
        assert!((a + b - 1.0).abs() < 1e-12, "seed {seed}: {a} + {b}");
    }
}

#[test]
fn risk_is_linear_in_weight() {
    // Dyadic inputs keep every operation exact.
    let (fp, fn_) = (3.25, 11.5);
    for (a, b) in [(0.0, 1.0), (0.25, 0.75), (0.125, 0.5)] {
        let lhs = risk(fp, fn_, a).value + risk(fp, fn_, b).value;
        assert_eq!(lhs, 2.0 * risk(fp, fn_, (a + b) / 2.0).value);
    }
    let mut rng = TestRng::new(1);
    for _ in 0..1000 {
        let (fp, fn_) = (rng.uniform() * 50.0, rng.uniform() * 50.0);
        let (a, b) = (rng.uniform(), rng.uniform());
        let lhs = risk(fp, fn_, a).value + risk(fp, fn_, b).value;
        let rhs = 2.0 * risk(fp, fn_, (a + b) / 2.0).value;
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }
}

#[test]
fn strictly_monotone_adjustment_keeps_the_curve() {
    let model = worked_model();
    let truth = model.edges.indicator();
    for seed in 0..20 {
        let data = sample_mvn(&model.covariance, 40, seed).unwrap();
        let raw = raw_pvalues(&data, DfRule::NMinusP).unwrap();
        let base = RocCurve::from_scores(raw.values(), &truth).unwrap();
        for kind in [ProcedureKind::Sidak, ProcedureKind::Bonferroni] {
            let adj = kind.apply(&raw);
            // Compare only where the map kept every pair of raws apart.
            let order_kept = raw.values().iter().zip(adj.values()).all(|(&r1, &a1)| {
                raw.values()
                    .iter()
                    .zip(adj.values())
                    .all(|(&r2, &a2)| (r1 < r2) == (a1 < a2))
            });
            if order_kept {
                assert_eq!(
                    RocCurve::from_scores(adj.values(), &truth).unwrap(),
                    base,
                    "{kind} seed {seed}"
                );
            }
        }
        // Scaled-down raws never reach the clip, so Bonferroni must agree.
        let small = EdgePValues::new(7, raw.values().iter().map(|v| v / 32.0).collect()).unwrap();
        let adj = adjust_bonferroni(&small);
        assert!(adj.values().iter().all(|&v| v < 1.0));
        assert_eq!(
            auc(&RocCurve::from_scores(adj.values(), &truth).unwrap()),
            auc(&RocCurve::from_scores(small.values(), &truth).unwrap())
        );
    }
}

#[test]
fn clipping_merges_thresholds_and_can_raise_the_area() {
    // A misranked true edge at 0.9 ties with the clipped non-edge.
    let scores = [0.01, 0.5, 0.9];
    let positive = [true, false, true];
    let raw_area = auc(&RocCurve::from_scores(&scores, &positive).unwrap());
    let pv = EdgePValues::new(3, scores.to_vec()).unwrap();
    let clipped = adjust_bonferroni(&pv);
    assert_eq!(clipped.values(), &[0.03, 1.0, 1.0]);
    let adj_area = auc(&RocCurve::from_scores(clipped.values(), &positive).unwrap());
    assert_eq!(raw_area, 0.5);
    assert_eq!(adj_area, 0.75);
}

#[test]
fn fdr_and_fwer_from_counts() {
    let c = confusion(&worked_edges(), &EdgeSet::complete(7));
    assert_eq!((c.true_pos, c.false_pos), (9, 12));
    assert_eq!(fdr(&c), 12.0 / 21.0);
    assert_eq!(fwer(&[c.false_pos, 0]).unwrap(), 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roc_shape(scores in prop::collection::vec(prop_oneof![0.0..=1.0f64, Just(0.5)], 2..60), seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let mut positive: Vec<bool> = scores.iter().map(|_| rng.uniform() < 0.5).collect();
        positive[0] = true;
        positive[1] = false;
        let curve = RocCurve::from_scores(&scores, &positive).unwrap();
        prop_assert_eq!(curve.points[0], (0.0, 0.0));
        prop_assert_eq!(*curve.points.last().unwrap(), (1.0, 1.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        }
        let a = auc(&curve);
        prop_assert!((0.0..=1.0).contains(&a));
        let max_pos = scores.iter().zip(&positive).filter(|p| *p.1).map(|p| *p.0).fold(f64::MIN, f64::max);
        let min_neg = scores.iter().zip(&positive).filter(|p| !*p.1).map(|p| *p.0).fold(f64::MAX, f64::min);
        prop_assert_eq!(a == 1.0, max_pos < min_neg);
    }

    #[test]
    fn confusion_sums_to_pair_count(p in 2usize..=12, seed in any::<u64>()) {
        let mut rng = TestRng::new(seed);
        let c = confusion(&random_set(p, &mut rng), &random_set(p, &mut rng));
        prop_assert_eq!(c.total(), pair_count(p));
    }
}
