//! The identification procedures: unadjusted simultaneous testing and four
//! family-wise error rate adjustments (Bonferroni, Šidák, and their Holm
//! step-down variants), plus thresholding into an edge set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::edges::{pairs, EdgePValues, EdgeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcedureKind {
    Simultaneous,
    Bonferroni,
    Sidak,
    HolmBonferroni,
    HolmSidak,
}

impl ProcedureKind {
    pub const ALL: [ProcedureKind; 5] = [
        ProcedureKind::Simultaneous,
        ProcedureKind::Bonferroni,
        ProcedureKind::Sidak,
        ProcedureKind::HolmBonferroni,
        ProcedureKind::HolmSidak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProcedureKind::Simultaneous => "simultaneous",
            ProcedureKind::Bonferroni => "bonferroni",
            ProcedureKind::Sidak => "sidak",
            ProcedureKind::HolmBonferroni => "holm-bonferroni",
            ProcedureKind::HolmSidak => "holm-sidak",
        }
    }

    pub fn apply(self, raw: &EdgePValues) -> AdjustedPValues {
        match self {
            ProcedureKind::Simultaneous => adjust_identity(raw),
            ProcedureKind::Bonferroni => adjust_bonferroni(raw),
            ProcedureKind::Sidak => adjust_sidak(raw),
            ProcedureKind::HolmBonferroni => adjust_holm_bonferroni(raw),
            ProcedureKind::HolmSidak => adjust_holm_sidak(raw),
        }
    }

    /// Adjusts a family of any size; the family size is `raw.len()`.
    /// Values are expected in `[0, 1]`.
    pub fn adjust_values(self, raw: &[f64]) -> Vec<f64> {
        match self {
            ProcedureKind::Simultaneous => raw.to_vec(),
            ProcedureKind::Bonferroni => single_step_values(raw, bonferroni_inflate),
            ProcedureKind::Sidak => single_step_values(raw, sidak_inflate),
            ProcedureKind::HolmBonferroni => step_down_values(raw, bonferroni_inflate),
            ProcedureKind::HolmSidak => step_down_values(raw, sidak_inflate),
        }
    }
}

impl fmt::Display for ProcedureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProcedureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProcedureKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = ProcedureKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown procedure `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Per-edge p-values after a procedure's adjustment, in canonical pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedPValues {
    procedure: ProcedureKind,
    p: usize,
    values: Vec<f64>,
}

impl AdjustedPValues {
    pub fn procedure(&self) -> ProcedureKind {
        self.procedure
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `1 − (1 − π)^m`, evaluated as `−expm1(m · ln(1 − π))`.
pub fn sidak_inflate(pi: f64, m: usize) -> f64 {
    if m == 1 {
        return pi;
    }
    (-(m as f64 * (-pi).ln_1p()).exp_m1()).clamp(0.0, 1.0)
}

fn bonferroni_inflate(pi: f64, m: usize) -> f64 {
    (m as f64 * pi).min(1.0)
}

fn single_step_values(values: &[f64], inflate: fn(f64, usize) -> f64) -> Vec<f64> {
    let m = values.len();
    values.iter().map(|&v| inflate(v, m)).collect()
}

/// Holm step-down: with raws sorted ascending, the `a`-th adjusted value is
/// the running maximum of `inflate(π_(b), P − b + 1)` over `b ≤ a`.
fn step_down_values(values: &[f64], inflate: fn(f64, usize) -> f64) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps ties in edge-index order.
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &edge) in order.iter().enumerate() {
        running = running.max(inflate(values[edge], m - rank));
        adjusted[edge] = running;
    }
    adjusted
}

fn wrap(raw: &EdgePValues, kind: ProcedureKind) -> AdjustedPValues {
    AdjustedPValues {
        procedure: kind,
        p: raw.dim(),
        values: kind.adjust_values(raw.values()),
    }
}

pub fn adjust_identity(raw: &EdgePValues) -> AdjustedPValues {
    wrap(raw, ProcedureKind::Simultaneous)
}

pub fn adjust_bonferroni(raw: &EdgePValues) -> AdjustedPValues {
    wrap(raw, ProcedureKind::Bonferroni)
}

pub fn adjust_sidak(raw: &EdgePValues) -> AdjustedPValues {
    wrap(raw, ProcedureKind::Sidak)
}

pub fn adjust_holm_bonferroni(raw: &EdgePValues) -> AdjustedPValues {
    wrap(raw, ProcedureKind::HolmBonferroni)
}

pub fn adjust_holm_sidak(raw: &EdgePValues) -> AdjustedPValues {
    wrap(raw, ProcedureKind::HolmSidak)
}

/// Edges whose adjusted p-value is strictly below `alpha`.
///
/// # Panics
/// If `alpha` is outside `(0, 1)`. Use [`reject_below`] for the closed
/// threshold range used by ROC and risk sweeps.
pub fn decide(adj: &AdjustedPValues, alpha: f64) -> EdgeSet {
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "significance level must lie in (0, 1), got {alpha}"
    );
    reject_below(adj.dim(), adj.values(), alpha)
}

/// Edges whose value is strictly below `threshold`; any real threshold.
pub fn reject_below(p: usize, values: &[f64], threshold: f64) -> EdgeSet {
    let mut set = EdgeSet::empty(p);
    for ((i, j), &v) in pairs(p).zip(values) {
        if v < threshold {
            set.insert(i, j);
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn raw(p: usize, values: &[f64]) -> EdgePValues {
        EdgePValues::new(p, values.to_vec()).unwrap()
    }

    fn seven(v: f64) -> EdgePValues {
        raw(7, &[v; 21])
    }

    #[test]
    fn bonferroni_examples() {
        assert_abs_diff_eq!(adjust_bonferroni(&seven(0.001)).values()[0], 0.021, epsilon = 1e-15);
        assert_eq!(adjust_bonferroni(&seven(0.1)).values()[0], 1.0);
        assert_eq!(adjust_bonferroni(&seven(0.0)).values()[0], 0.0);
    }

    #[test]
    fn sidak_examples() {
        assert_eq!(adjust_sidak(&seven(0.0)).values()[0], 0.0);
        assert_eq!(adjust_sidak(&seven(1.0)).values()[0], 1.0);
        // 1 - 0.999^21 evaluated at 40 digits: 0.020791324035294852...
        assert_abs_diff_eq!(
            adjust_sidak(&seven(0.001)).values()[0],
            0.020_791_324_035_294_85,
            epsilon = 1e-15
        );
    }

    #[test]
    fn holm_bonferroni_examples() {
        let a = adjust_holm_bonferroni(&raw(3, &[0.5, 0.01, 0.02]));
        let v = a.values();
        assert_abs_diff_eq!(v[1], 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);

        let ties = adjust_holm_bonferroni(&raw(4, &[0.01; 6]));
        assert!(ties.values().iter().all(|&x| (x - 0.06).abs() < 1e-15));
        let clipped = adjust_holm_bonferroni(&raw(4, &[0.3; 6]));
        assert!(clipped.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn holm_sidak_examples() {
        assert_eq!(adjust_holm_sidak(&raw(3, &[0.0; 3])).values(), &[0.0; 3]);
        assert_eq!(adjust_holm_sidak(&raw(2, &[0.37])).values(), &[0.37]);
    }

    #[test]
    fn identity_examples() {
        let r = raw(3, &[0.0, 0.5, 1.0]);
        let a = adjust_identity(&r);
        assert_eq!(a.values(), r.values());
        assert_eq!(a.procedure(), ProcedureKind::Simultaneous);
        assert!(adjust_identity(&raw(1, &[])).values().is_empty());
    }

    #[test]
    fn decide_examples() {
        assert!(decide(&adjust_identity(&raw(3, &[1.0; 3])), 0.05).is_empty());
        assert!(decide(&adjust_identity(&raw(3, &[0.0; 3])), 0.05).is_complete());
        let set = decide(&adjust_identity(&raw(3, &[0.04, 0.05, 0.06])), 0.05);
        assert_eq!(set.len(), 1);
        assert!(set.contains(0, 1));
    }

    #[test]
    #[should_panic]
    fn decide_rejects_alpha_out_of_range() {
        decide(&adjust_identity(&raw(2, &[0.1])), 1.0);
    }

    #[test]
    fn names_round_trip() {
        for k in ProcedureKind::ALL {
            assert_eq!(k.name().parse::<ProcedureKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
            assert_eq!(k.apply(&seven(0.01)).procedure(), k);
        }
        assert!("holm".parse::<ProcedureKind>().is_err());
    }
}
