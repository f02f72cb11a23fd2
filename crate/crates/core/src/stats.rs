//! Sample moments, concentration and partial-correlation matrices, and
//! per-edge p-values for the hypothesis of conditional independence.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::edges::{pair_count, pairs, EdgePValues, EdgeSet};
use crate::linalg;
use crate::{Error, Result};

/// Relative symmetry tolerance for matrices supplied from outside.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// `|r|` within this distance of 1 is treated as an infinite statistic.
pub const UNIT_CORRELATION_TOLERANCE: f64 = 1e-12;

/// `n × p` data matrix, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix(DMatrix<f64>);

impl ObservationMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::EmptyInput("observation matrix"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation matrix"));
        }
        Ok(ObservationMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged observation rows".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |m, j| rows[m][j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn p(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Symmetric positive-definite covariance, with the mean it was centred on.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    values: DMatrix<f64>,
    mean: DVector<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry and positive definiteness; the mean is zero.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        check_spd(&values, "covariance matrix")?;
        let p = values.nrows();
        Ok(CovarianceMatrix {
            values: linalg::symmetrize(&values),
            mean: DVector::zeros(p),
        })
    }

    pub(crate) fn from_parts(values: DMatrix<f64>, mean: DVector<f64>) -> Self {
        CovarianceMatrix { values, mean }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
}

/// Symmetric positive-definite inverse covariance. Zeros off the diagonal
/// are missing edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationMatrix(DMatrix<f64>);

impl ConcentrationMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        check_spd(&values, "concentration matrix")?;
        Ok(ConcentrationMatrix(linalg::symmetrize(&values)))
    }

    pub fn identity(p: usize) -> Self {
        ConcentrationMatrix(DMatrix::identity(p, p))
    }

    pub(crate) fn from_trusted(values: DMatrix<f64>) -> Self {
        ConcentrationMatrix(values)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Unit-diagonal matrix of partial correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCorrelationMatrix(DMatrix<f64>);

impl PartialCorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Degrees of freedom of the null t distribution for a partial correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DfRule {
    /// `n − p`: the usual test conditioning on the other `p − 2` variables.
    #[default]
    #[serde(rename = "n-p")]
    NMinusP,
    /// `n − p − 2`.
    #[serde(rename = "n-p-2")]
    NMinusPMinus2,
}

impl DfRule {
    pub const ALL: [DfRule; 2] = [DfRule::NMinusP, DfRule::NMinusPMinus2];

    pub fn name(self) -> &'static str {
        match self {
            DfRule::NMinusP => "n-p",
            DfRule::NMinusPMinus2 => "n-p-2",
        }
    }

    /// Degrees of freedom for `n` observations of `p` variables, or `None`
    /// when the sample is too small.
    pub fn df(self, n: usize, p: usize) -> Option<usize> {
        if n < p + 2 {
            return None;
        }
        let df = match self {
            DfRule::NMinusP => n - p,
            DfRule::NMinusPMinus2 => n.checked_sub(p + 2)?,
        };
        (df >= 1).then_some(df)
    }
}

impl fmt::Display for DfRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DfRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DfRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown df rule `{s}` (expected `n-p` or `n-p-2`)"))
    }
}

fn check_spd(values: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if values.nrows() != values.ncols() {
        return Err(Error::DimensionMismatch(format!("{what} must be square")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    if !linalg::is_symmetric(values, SYMMETRY_TOLERANCE) {
        return Err(Error::DimensionMismatch(format!("{what} is not symmetric")));
    }
    linalg::cholesky(values).map(|_| ())
}

pub fn sample_mean(data: &ObservationMatrix) -> DVector<f64> {
    let n = data.n() as f64;
    data.values().row_sum().transpose() / n
}

/// Unbiased (`n − 1`) sample covariance. Fails when the result is not
/// numerically positive definite.
pub fn sample_covariance(data: &ObservationMatrix) -> Result<CovarianceMatrix> {
    let (n, p) = (data.n(), data.p());
    if n < 2 {
        return Err(Error::InsufficientSample {
            n,
            p,
            rule: "covariance (n >= 2)".into(),
        });
    }
    let mean = sample_mean(data);
    let mut centred = data.values().clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let s = linalg::symmetrize(&(centred.transpose() * &centred / (n - 1) as f64));
    linalg::cholesky(&s)?;
    Ok(CovarianceMatrix::from_parts(s, mean))
}

pub fn concentration_from_covariance(s: &CovarianceMatrix) -> Result<ConcentrationMatrix> {
    linalg::spd_inverse(s.values()).map(ConcentrationMatrix)
}

/// `ρ_ij = k_ij / √(k_ii k_jj)`, taken without the conventional minus sign.
/// Every test downstream is two-sided, so decisions do not depend on it.
pub fn partial_correlations(k: &ConcentrationMatrix) -> PartialCorrelationMatrix {
    let m = k.values();
    let p = m.nrows();
    let r = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            (m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt()).clamp(-1.0, 1.0)
        }
    });
    PartialCorrelationMatrix(r)
}

/// Two-sided tail probability `P(|T| ≥ |t|)` for Student's t with `df`
/// degrees of freedom.
///
/// Uses `P(|T| ≥ |t|) = I_x(df/2, 1/2)` with `x = df / (df + t²)`, which keeps
/// full relative precision far into the tail.
pub fn student_t_two_sided(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    if t == 0.0 {
        return 1.0;
    }
    let nu = df as f64;
    let x = nu / (nu + t * t);
    statrs::function::beta::beta_reg(nu / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Raw p-value per edge for `H0: ρ_ij = 0`, using
/// `t = r √df / √(1 − r²)` with `df` from `rule`.
pub fn edge_pvalues(r: &PartialCorrelationMatrix, n: usize, rule: DfRule) -> Result<EdgePValues> {
    let p = r.dim();
    let df = rule.df(n, p).ok_or_else(|| Error::InsufficientSample {
        n,
        p,
        rule: rule.name().into(),
    })?;
    let sqrt_df = (df as f64).sqrt();
    let mut values = Vec::with_capacity(pair_count(p));
    for (i, j) in pairs(p) {
        let rho = r.get(i, j).abs().min(1.0);
        let pv = if 1.0 - rho <= UNIT_CORRELATION_TOLERANCE {
            0.0
        } else {
            let t = rho * sqrt_df / (1.0 - rho * rho).sqrt();
            student_t_two_sided(t, df)
        };
        values.push(pv);
    }
    EdgePValues::new(p, values)
}

/// Full pipeline from data to raw per-edge p-values.
pub fn raw_pvalues(data: &ObservationMatrix, rule: DfRule) -> Result<EdgePValues> {
    let (n, p) = (data.n(), data.p());
    if rule.df(n, p).is_none() {
        return Err(Error::InsufficientSample {
            n,
            p,
            rule: rule.name().into(),
        });
    }
    let s = sample_covariance(data)?;
    let k = concentration_from_covariance(&s)?;
    edge_pvalues(&partial_correlations(&k), n, rule)
}

/// Pairs whose concentration entry exceeds `tol` in magnitude.
pub fn edges_from_concentration(k: &ConcentrationMatrix, tol: f64) -> EdgeSet {
    let m = k.values();
    let p = m.nrows();
    let mut set = EdgeSet::empty(p);
    for (i, j) in pairs(p) {
        if m[(i, j)].abs() > tol {
            set.insert(i, j);
        }
    }
    set
}
