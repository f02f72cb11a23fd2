//! Fixtures and independent oracles shared by the integration tests.
//!
//! Nothing here calls into the code paths it is used to check.
#![allow(dead_code)]

use ggm_core::{ConcentrationMatrix, EdgeSet, TrueModel};
use nalgebra::DMatrix;

/// The worked 7×7 concentration matrix (1-based pairs with values).
pub const WORKED_EDGES: [(usize, usize, f64); 9] = [
    (1, 2, 0.465),
    (1, 5, 0.511),
    (1, 6, 0.392),
    (2, 5, 0.448),
    (3, 6, 0.32),
    (4, 5, 0.262),
    (4, 7, 0.314),
    (5, 6, 0.459),
    (5, 7, 0.42),
];

pub fn worked_matrix() -> DMatrix<f64> {
    let mut k = DMatrix::<f64>::identity(7, 7);
    for &(i, j, v) in &WORKED_EDGES {
        k[(i - 1, j - 1)] = v;
        k[(j - 1, i - 1)] = v;
    }
    k
}

pub fn worked_model() -> TrueModel {
    TrueModel::from_concentration(ConcentrationMatrix::new(worked_matrix()).unwrap()).unwrap()
}

pub fn worked_edges() -> EdgeSet {
    EdgeSet::from_pairs(7, WORKED_EDGES.iter().map(|&(i, j, _)| (i - 1, j - 1))).unwrap()
}

/// Two-sided Student-t tail `P(|T| ≥ t)` for integer `df` from the classical
/// finite trigonometric series (Abramowitz & Stegun 26.7.3–4).
pub fn t_two_sided_series(t: f64, df: usize) -> f64 {
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let inside = if df.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 2;
        while k <= df - 2 {
            term *= c * c * (k - 1) as f64 / k as f64;
            sum += term;
            k += 2;
        }
        s * sum
    } else {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = c;
            let mut k = 3;
            while k <= df - 2 {
                term *= c * c * (k - 1) as f64 / k as f64;
                sum += term;
                k += 2;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    };
    1.0 - inside
}

/// Kolmogorov–Smirnov distance of a sample from Uniform[0, 1].
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut u = sample.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Cholesky pivots `d_j` in order, stopping after the first nonpositive one.
#[allow(clippy::needless_range_loop)]
pub fn cholesky_pivots(a: &DMatrix<f64>) -> Vec<f64> {
    let p = a.nrows();
    let mut pivots = Vec::with_capacity(p);
    let mut l = vec![vec![0.0; p]; p];
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        pivots.push(d);
        if d <= 0.0 {
            return pivots;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    pivots
}

pub fn cholesky_succeeds(a: &DMatrix<f64>) -> bool {
    let pivots = cholesky_pivots(a);
    pivots.len() == a.nrows() && pivots.iter().all(|&d| d > 0.0)
}

/// Smallest eigenvalue by bisection on "A − λI is positive definite".
pub fn min_eigenvalue_bisection(a: &DMatrix<f64>) -> f64 {
    let p = a.nrows();
    let bound = a.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cholesky_succeeds(&(a - DMatrix::<f64>::identity(p, p) * mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Plain `splitmix64` stream for generating test inputs.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal by Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Random SPD matrix `A Aᵀ + p·I` with Gaussian `A`.
pub fn random_spd(p: usize, rng: &mut TestRng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.normal());
    &a * a.transpose() + DMatrix::<f64>::identity(p, p) * p as f64
}
