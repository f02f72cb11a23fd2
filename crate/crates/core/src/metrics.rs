//! Error accounting for an inferred graph against the truth, and the
//! aggregate measures built from it.

use serde::{Deserialize, Serialize};

use crate::adjust::AdjustedPValues;
use crate::edges::{pair_count, EdgeSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// `TN / (FP + TN)`; `None` when there are no true non-edges.
    pub fn specificity(&self) -> Option<f64> {
        let d = self.false_pos + self.true_neg;
        (d > 0).then(|| self.true_neg as f64 / d as f64)
    }

    /// `TP / (TP + FN)`; `None` when there are no true edges.
    pub fn sensitivity(&self) -> Option<f64> {
        let d = self.true_pos + self.false_neg;
        (d > 0).then(|| self.true_pos as f64 / d as f64)
    }
}

pub fn confusion(truth: &EdgeSet, inferred: &EdgeSet) -> ConfusionCounts {
    assert_eq!(truth.dim(), inferred.dim(), "edge sets over different vertex counts");
    let p = truth.dim();
    let tp = inferred.iter().filter(|e| truth.contains(e.i, e.j)).count();
    let fp = inferred.len() - tp;
    let fn_ = truth.len() - tp;
    ConfusionCounts {
        true_pos: tp,
        false_pos: fp,
        true_neg: pair_count(p) - tp - fp - fn_,
        false_neg: fn_,
    }
}

/// Fraction of trials with at least one false positive.
pub fn fwer(trial_fp_counts: &[usize]) -> Result<f64> {
    if trial_fp_counts.is_empty() {
        return Err(Error::EmptyInput("trial false-positive counts"));
    }
    let hits = trial_fp_counts.iter().filter(|&&c| c > 0).count();
    Ok(hits as f64 / trial_fp_counts.len() as f64)
}

/// `FP / (FP + TP)`, taken as 0 when nothing was discovered.
pub fn fdr(c: &ConfusionCounts) -> f64 {
    let d = c.false_pos + c.true_pos;
    if d == 0 {
        0.0
    } else {
        c.false_pos as f64 / d as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskValue {
    pub alpha: f64,
    pub value: f64,
}

/// `E(FP)·(1 − α) + E(FN)·α`.
pub fn risk(mean_fp: f64, mean_fn: f64, alpha: f64) -> RiskValue {
    RiskValue {
        alpha,
        value: mean_fp * (1.0 - alpha) + mean_fn * alpha,
    }
}

/// Piecewise-linear ROC curve, `x = 1 − specificity`, `y = sensitivity`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Sweeps the rule `score < θ` over every distinct score.
    ///
    /// Starts at `(0, 0)` (θ = 0 for p-values, nothing below) and ends at
    /// `(1, 1)`. Tied scores enter together, giving one diagonal segment.
    pub fn from_scores(scores: &[f64], positive: &[bool]) -> Result<Self> {
        assert_eq!(scores.len(), positive.len());
        let n_pos = positive.iter().filter(|&&b| b).count();
        let n_neg = positive.len() - n_pos;
        if n_pos == 0 {
            return Err(Error::DegenerateTruth("empty"));
        }
        if n_neg == 0 {
            return Err(Error::DegenerateTruth("complete"));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

        let mut points = Vec::with_capacity(scores.len() + 1);
        points.push((0.0, 0.0));
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut k = 0;
        while k < order.len() {
            let v = scores[order[k]];
            while k < order.len() && scores[order[k]] == v {
                if positive[order[k]] {
                    tp += 1;
                } else {
                    fp += 1;
                }
                k += 1;
            }
            points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        }
        Ok(RocCurve { points })
    }
}

pub fn roc_curve(adj: &AdjustedPValues, truth: &EdgeSet) -> Result<RocCurve> {
    assert_eq!(adj.dim(), truth.dim());
    RocCurve::from_scores(adj.values(), &truth.indicator())
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(p: usize, pairs: &[(usize, usize)]) -> EdgeSet {
        EdgeSet::from_pairs(p, pairs.iter().map(|&(i, j)| (i - 1, j - 1))).unwrap()
    }

    #[test]
    fn confusion_hand_example() {
        let c = confusion(&set(3, &[(1, 2), (1, 3)]), &set(3, &[(1, 2), (2, 3)]));
        assert_eq!(
            c,
            ConfusionCounts {
                true_pos: 1,
                false_pos: 1,
                true_neg: 0,
                false_neg: 1
            }
        );
        let t = set(5, &[(1, 2), (3, 4)]);
        let same = confusion(&t, &t);
        assert_eq!((same.false_pos, same.false_neg, same.total()), (0, 0, 10));
    }

    #[test]
    fn fwer_examples() {
        assert_eq!(fwer(&[0, 2, 0, 1]).unwrap(), 0.5);
        assert_eq!(fwer(&[0, 0, 0]).unwrap(), 0.0);
        assert_eq!(fwer(&[3, 1]).unwrap(), 1.0);
        assert!(fwer(&[]).is_err());
    }

    #[test]
    fn fdr_examples() {
        let c = |tp, fp| ConfusionCounts {
            true_pos: tp,
            false_pos: fp,
            ..Default::default()
        };
        assert_eq!(fdr(&c(3, 1)), 0.25);
        assert_eq!(fdr(&c(0, 0)), 0.0);
        assert_eq!(fdr(&c(0, 2)), 1.0);
    }

    #[test]
    fn risk_examples() {
        assert_eq!(risk(2.0, 4.0, 0.5).value, 3.0);
        assert_eq!(risk(2.0, 4.0, 0.0).value, 2.0);
        assert_eq!(risk(2.0, 4.0, 1.0).value, 4.0);
    }

    #[test]
    fn sensitivity_and_specificity() {
        let c = ConfusionCounts {
            true_pos: 3,
            false_pos: 1,
            true_neg: 4,
            false_neg: 1,
        };
        assert_eq!(c.sensitivity(), Some(0.75));
        assert_eq!(c.specificity(), Some(0.8));
        assert_eq!(ConfusionCounts::default().sensitivity(), None);
    }

    #[test]
    fn perfect_separation_reaches_top_left() {
        let curve = RocCurve::from_scores(&[0.01, 0.02, 0.5, 0.9], &[true, true, false, false]).unwrap();
        assert!(curve.points.contains(&(0.0, 1.0)));
        assert_eq!(auc(&curve), 1.0);
    }

    #[test]
    fn identical_scores_give_diagonal() {
        let curve = RocCurve::from_scores(&[0.3; 4], &[true, false, true, false]).unwrap();
        assert_eq!(curve.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&curve), 0.5);
    }

    #[test]
    fn auc_reference_curves() {
        let c = |pts: &[(f64, f64)]| RocCurve { points: pts.to_vec() };
        assert_eq!(auc(&c(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)])), 1.0);
        assert_eq!(auc(&c(&[(0.0, 0.0), (1.0, 1.0)])), 0.5);
        assert_eq!(auc(&c(&[(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])), 0.5);
    }

    #[test]
    fn degenerate_truth_is_an_error() {
        assert!(matches!(
            RocCurve::from_scores(&[0.1, 0.2], &[false, false]),
            Err(Error::DegenerateTruth("empty"))
        ));
        assert!(matches!(
            RocCurve::from_scores(&[0.1, 0.2], &[true, true]),
            Err(Error::DegenerateTruth("complete"))
        ));
    }
}
