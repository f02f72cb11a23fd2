//! Ground-truth sparse concentration matrices and multivariate normal
//! sampling.
//!
//! Random numbers come from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64`, and standard normals from `rand_distr::StandardNormal`.
//! Both are platform-independent, so a seed pins every generated bit.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::edges::{pair_count, pairs, EdgeSet};
use crate::linalg;
use crate::stats::{edges_from_concentration, ConcentrationMatrix, CovarianceMatrix, ObservationMatrix};
use crate::{Error, Result};

/// Zero threshold used when reading the true graph off a concentration matrix.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Smallest eigenvalue a repaired concentration matrix may have.
pub const MIN_EIGENVALUE: f64 = 1e-6;

/// The repair schedule is `δ = k / REPAIR_STEPS_PER_UNIT` for
/// `k = 0, …, REPAIR_MAX_STEPS`, i.e. `0, 0.05, …, 5`.
pub const REPAIR_STEPS_PER_UNIT: f64 = 20.0;
pub const REPAIR_MAX_STEPS: usize = 100;

/// How many off-diagonal pairs carry an edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSpec {
    Count(usize),
    /// Fraction of all pairs; converted with round-half-up.
    Density(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub p: usize,
    pub edge_spec: EdgeSpec,
    pub rho_min: f64,
    pub rho_max: f64,
    pub seed: u64,
    #[serde(default)]
    pub random_sign: bool,
}

impl GeneratorSpec {
    /// Number of edges the spec asks for.
    pub fn edge_count(&self) -> usize {
        match self.edge_spec {
            EdgeSpec::Count(m) => m,
            EdgeSpec::Density(q) => (q * pair_count(self.p) as f64 + 0.5).floor() as usize,
        }
    }

    /// Every violated constraint, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.p < 2 {
            out.push(format!("p must be at least 2 (got {})", self.p));
        }
        match self.edge_spec {
            EdgeSpec::Density(q) if !(0.0..=1.0).contains(&q) => {
                out.push(format!("q must lie in [0, 1] (got {q})"));
            }
            EdgeSpec::Count(m) if m > pair_count(self.p) => {
                out.push(format!(
                    "edge count {m} exceeds the {} available pairs for p = {}",
                    pair_count(self.p),
                    self.p
                ));
            }
            _ => {}
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_max && self.rho_max < 1.0) {
            out.push(format!(
                "need 0 < rho_min <= rho_max < 1 (got rho_min = {}, rho_max = {})",
                self.rho_min, self.rho_max
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(v.join("; ")))
        }
    }
}

/// The fixed model behind an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub concentration: ConcentrationMatrix,
    pub covariance: CovarianceMatrix,
    pub edges: EdgeSet,
    pub mu: DVector<f64>,
    pub spec: Option<GeneratorSpec>,
    pub repaired: bool,
    pub delta: f64,
}

impl TrueModel {
    /// Wraps a known concentration matrix (for example a published fixture).
    pub fn from_concentration(k: ConcentrationMatrix) -> Result<Self> {
        let covariance = covariance_from_concentration(&k)?;
        let p = k.dim();
        Ok(TrueModel {
            edges: edges_from_concentration(&k, EDGE_TOLERANCE),
            concentration: k,
            covariance,
            mu: DVector::zeros(p),
            spec: None,
            repaired: false,
            delta: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.concentration.dim()
    }

    pub fn to_file(&self) -> ModelFile {
        let k = self.concentration.values();
        let p = self.dim();
        ModelFile {
            p,
            seed: self.spec.as_ref().map(|s| s.seed),
            spec: self.spec.clone(),
            repaired: self.repaired,
            delta: self.delta,
            matrix: (0..p).map(|i| (0..p).map(|j| k[(i, j)]).collect()).collect(),
            edges: self.edges.iter().map(|e| (e.i + 1, e.j + 1, k[(e.i, e.j)])).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of a [`TrueModel`]. Edge indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub p: usize,
    pub seed: Option<u64>,
    pub spec: Option<GeneratorSpec>,
    pub repaired: bool,
    pub delta: f64,
    pub matrix: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<TrueModel> {
        let p = self.p;
        if self.matrix.len() != p || self.matrix.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidModel(format!("matrix must be {p}x{p}")));
        }
        let m = DMatrix::from_fn(p, p, |i, j| self.matrix[i][j]);
        let k = ConcentrationMatrix::new(m).map_err(|e| Error::InvalidModel(e.to_string()))?;
        let mut model = TrueModel::from_concentration(k)?;
        let listed = EdgeSet::from_pairs(
            p,
            self.edges
                .iter()
                .map(|&(i, j, _)| (i.wrapping_sub(1), j.wrapping_sub(1))),
        )
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
        if listed != model.edges {
            return Err(Error::InvalidModel(
                "edge list does not match the zero pattern of the matrix".into(),
            ));
        }
        model.spec = self.spec;
        model.repaired = self.repaired;
        model.delta = self.delta;
        Ok(model)
    }
}

/// Draws a sparse concentration matrix per `spec`.
///
/// The matrix has unit diagonal and exactly `m` nonzero symmetric pairs chosen
/// uniformly without replacement, with magnitudes uniform on
/// `[rho_min, rho_max]`. It is then shrunk toward the identity if needed to be
/// positive definite.
pub fn generate_model(spec: &GeneratorSpec) -> Result<TrueModel> {
    let k = draw_concentration(spec)?;
    let (k, delta) = repair_positive_definite(&k)?;
    let mut model = TrueModel::from_concentration(k)?;
    model.spec = Some(spec.clone());
    model.repaired = delta > 0.0;
    model.delta = delta;
    Ok(model)
}

/// The unit-diagonal sparse draw behind [`generate_model`], before any
/// positive-definiteness repair.
pub fn draw_concentration(spec: &GeneratorSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let p = spec.p;
    let m = spec.edge_count();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);

    let mut chosen = index::sample(&mut rng, pair_count(p), m).into_vec();
    chosen.sort_unstable();
    let all_pairs: Vec<(usize, usize)> = pairs(p).collect();

    let mut k = DMatrix::<f64>::identity(p, p);
    for idx in chosen {
        let (i, j) = all_pairs[idx];
        let mut v = rng.random_range(spec.rho_min..=spec.rho_max);
        if spec.random_sign && rng.random_bool(0.5) {
            v = -v;
        }
        k[(i, j)] = v;
        k[(j, i)] = v;
    }
    Ok(k)
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

/// Shrinks a unit-diagonal symmetric matrix toward the identity,
/// `K' = (K + δI) / (1 + δ)`, with the first `δ` in `0, 0.05, …, 5` that
/// brings the smallest eigenvalue to at least [`MIN_EIGENVALUE`].
///
/// Zeros stay zero and the diagonal stays one. Returns the matrix and `δ`.
pub fn repair_positive_definite(k: &DMatrix<f64>) -> Result<(ConcentrationMatrix, f64)> {
    let p = k.nrows();
    if k.ncols() != p || !linalg::is_symmetric(k, 0.0) {
        return Err(Error::DimensionMismatch("repair needs a symmetric matrix".into()));
    }
    if (0..p).any(|i| k[(i, i)] != 1.0) {
        return Err(Error::DimensionMismatch("repair needs a unit diagonal".into()));
    }
    let lambda = min_eigenvalue(k);
    let mut last = lambda;
    for step in 0..=REPAIR_MAX_STEPS {
        let delta = step as f64 / REPAIR_STEPS_PER_UNIT;
        // Eigenvalues map as λ ↦ (λ + δ) / (1 + δ).
        let shifted = (lambda + delta) / (1.0 + delta);
        last = shifted;
        if shifted < MIN_EIGENVALUE {
            continue;
        }
        if step == 0 {
            return Ok((ConcentrationMatrix::from_trusted(k.clone()), 0.0));
        }
        let scale = 1.0 + delta;
        let repaired = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { k[(i, j)] / scale });
        // Confirm on the actual matrix rather than trusting the shift formula.
        if min_eigenvalue(&repaired) >= MIN_EIGENVALUE {
            return Ok((ConcentrationMatrix::from_trusted(repaired), delta));
        }
    }
    Err(Error::GenerationFailure {
        min_eigenvalue: last,
        delta: REPAIR_MAX_STEPS as f64 / REPAIR_STEPS_PER_UNIT,
    })
}

pub fn covariance_from_concentration(k: &ConcentrationMatrix) -> Result<CovarianceMatrix> {
    let sigma = linalg::spd_inverse(k.values())?;
    Ok(CovarianceMatrix::from_parts(sigma, DVector::zeros(k.dim())))
}

/// `n` i.i.d. rows from `N(0, Σ)`, each formed as `L z` with `L` the lower
/// Cholesky factor of `Σ`.
pub fn sample_mvn(sigma: &CovarianceMatrix, n: usize, seed: u64) -> Result<ObservationMatrix> {
    let p = sigma.dim();
    let l = linalg::cholesky(sigma.values())?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = DMatrix::<f64>::zeros(n, p);
    let mut z = DVector::<f64>::zeros(p);
    for m in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let y = &l * &z;
        out.row_mut(m).copy_from(&y.transpose());
    }
    ObservationMatrix::new(out)
}
