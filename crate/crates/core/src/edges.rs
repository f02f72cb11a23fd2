//! Unordered vertex pairs and per-edge values.
//!
//! Pairs are stored 0-based with `i < j`. Per-edge vectors use the canonical
//! row-major order of the strict upper triangle: `(0,1), (0,2), …, (0,p-1),
//! (1,2), …`. Files and user-facing output are 1-based.

use std::collections::BTreeSet;
use std::fmt;

/// Number of unordered pairs among `p` vertices.
pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Position of the pair `(i, j)`, `i < j < p`, in canonical order.
pub fn pair_index(i: usize, j: usize, p: usize) -> usize {
    debug_assert!(i < j && j < p);
    i * (2 * p - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j < p`, in canonical order.
pub fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |i| (i + 1..p).map(move |j| (i, j)))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
}

impl Edge {
    /// Builds a normalized edge; panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loops are not edges");
        Edge {
            i: a.min(b),
            j: a.max(b),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i + 1, self.j + 1)
    }
}

/// A set of unordered pairs over `p` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    p: usize,
    edges: BTreeSet<Edge>,
}

impl EdgeSet {
    pub fn empty(p: usize) -> Self {
        EdgeSet {
            p,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(p: usize) -> Self {
        EdgeSet {
            p,
            edges: pairs(p).map(|(i, j)| Edge { i, j }).collect(),
        }
    }

    /// Builds a set from 0-based pairs, rejecting self-loops and
    /// out-of-range vertices.
    pub fn from_pairs<I>(p: usize, pairs: I) -> crate::Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edges = BTreeSet::new();
        for (a, b) in pairs {
            if a == b || a >= p || b >= p {
                return Err(crate::Error::DimensionMismatch(format!(
                    "pair ({}, {}) is not an edge over {p} vertices",
                    a + 1,
                    b + 1
                )));
            }
            edges.insert(Edge::new(a, b));
        }
        Ok(EdgeSet { p, edges })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == pair_count(self.p)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&Edge::new(i, j))
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        assert!(i < self.p && j < self.p);
        self.edges.insert(Edge::new(i, j));
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.edges.is_subset(&other.edges)
    }

    /// Membership as a boolean vector in canonical pair order.
    pub fn indicator(&self) -> Vec<bool> {
        pairs(self.p).map(|(i, j)| self.contains(i, j)).collect()
    }
}

/// One raw p-value per unordered pair, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePValues {
    p: usize,
    values: Vec<f64>,
}

impl EdgePValues {
    pub fn new(p: usize, values: Vec<f64>) -> crate::Result<Self> {
        if values.len() != pair_count(p) {
            return Err(crate::Error::DimensionMismatch(format!(
                "{} p-values for {p} vertices (expected {})",
                values.len(),
                pair_count(p)
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(crate::Error::DimensionMismatch("p-values must lie in [0, 1]".into()));
        }
        Ok(EdgePValues { p, values })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        self.values[pair_index(a, b, self.p)]
    }
}
