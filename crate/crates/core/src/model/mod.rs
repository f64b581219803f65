//! Ising instances over `{-1, 1}^n`.
//!
//! Couplings are stored once per unordered pair with `i < j`, and the energy
//! of a configuration is `Σ_{i<j} J_ij φ_ij(x)`. Callers coming from the
//! ordered-pair convention `Σ_{i,j}` should double their couplings.

mod coloring;
mod ensemble;
mod io;

pub use coloring::{greedy_coloring, Coloring};
pub use ensemble::{generate, Ensemble, WeightDist};
pub use io::{load_instance, store_instance};

use serde::{Deserialize, Serialize};

use crate::linalg::SymMatrix;
use crate::{Error, Result};

/// Upper limit on `n` accepted from external input.
pub const MAX_SPINS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionalKind {
    /// `φ_ij(x) = x_i x_j`
    #[serde(rename = "pair")]
    PairProduct,
    /// `φ_ij(x) = (x_i − x_j)²`
    #[serde(rename = "sqdiff")]
    SquaredDifference,
}

impl FunctionalKind {
    #[inline]
    pub fn phi(self, xi: i8, xj: i8) -> f64 {
        match self {
            FunctionalKind::PairProduct => f64::from(xi * xj),
            FunctionalKind::SquaredDifference => {
                let d = f64::from(xi - xj);
                d * d
            }
        }
    }

    /// Expected functional value given the pair moment `E[x_i x_j] = m`.
    #[inline]
    pub fn expectation_from_moment(self, m: f64) -> f64 {
        match self {
            FunctionalKind::PairProduct => m,
            FunctionalKind::SquaredDifference => 2.0 - 2.0 * m,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionalKind::PairProduct => "pair",
            FunctionalKind::SquaredDifference => "sqdiff",
        }
    }
}

/// A point of the hypercube `{-1, 1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::param(format!(
                "spin {pos} is {}, expected -1 or +1",
                values[pos]
            )));
        }
        Ok(SpinVector(values))
    }

    /// Configuration whose spin `i` is `+1` iff bit `i` of `index` is set.
    pub fn from_index(index: u64, n: usize) -> Self {
        SpinVector(
            (0..n)
                .map(|i| if index >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Maps nonnegative values to `+1` and negative values to `-1`.
    pub fn from_signs(values: &[f64]) -> Self {
        SpinVector(
            values
                .iter()
                .map(|&v| if v >= 0.0 { 1 } else { -1 })
                .collect(),
        )
    }

    pub(crate) fn from_raw(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 1 || v == -1));
        SpinVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> SpinVector {
        SpinVector(self.0.iter().map(|&v| -v).collect())
    }

    /// Inverse of [`SpinVector::from_index`].
    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &v)| if v > 0 { acc | 1 << i } else { acc })
    }
}

impl AsRef<[i8]> for SpinVector {
    fn as_ref(&self) -> &[i8] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    n: usize,
    kind: FunctionalKind,
    couplings: Vec<Coupling>,
}

impl IsingInstance {
    /// Validates and canonicalizes `(i, j, J_ij)` triples: pairs are reordered
    /// to `i < j`, zero couplings are dropped, and the list is sorted.
    pub fn new(
        n: usize,
        kind: FunctionalKind,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("an instance needs at least one spin"));
        }
        if n > MAX_SPINS {
            return Err(Error::param(format!(
                "n = {n} exceeds the limit {MAX_SPINS}"
            )));
        }
        let mut list = Vec::new();
        for (a, b, value) in couplings {
            if a >= n {
                return Err(Error::IndexOutOfRange { index: a, n });
            }
            if b >= n {
                return Err(Error::IndexOutOfRange { index: b, n });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !value.is_finite() {
                return Err(Error::param(format!("coupling ({a}, {b}) is not finite")));
            }
            list.push(Coupling {
                i: a.min(b),
                j: a.max(b),
                value,
            });
        }
        list.sort_by_key(|c| (c.i, c.j));
        if let Some(w) = list
            .windows(2)
            .find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return Err(Error::DuplicatePair(w[0].i, w[0].j));
        }
        list.retain(|c| c.value != 0.0);
        Ok(IsingInstance {
            n,
            kind,
            couplings: list,
        })
    }

    /// Instance with no couplings.
    pub fn empty(n: usize, kind: FunctionalKind) -> Result<Self> {
        Self::new(n, kind, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.couplings
            .binary_search_by_key(&key, |c| (c.i, c.j))
            .map(|k| self.couplings[k].value)
            .unwrap_or(0.0)
    }

    pub fn with_kind(&self, kind: FunctionalKind) -> Self {
        IsingInstance {
            kind,
            ..self.clone()
        }
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.n,
            self.kind,
            self.couplings.iter().map(|c| (c.i, c.j, alpha * c.value)),
        )
    }

    /// All stored couplings strictly positive (vacuously true when empty).
    pub fn is_ferromagnetic(&self) -> bool {
        self.couplings.iter().all(|c| c.value > 0.0)
    }

    pub fn abs_coupling_sum(&self) -> f64 {
        self.couplings.iter().map(|c| c.value.abs()).sum()
    }

    pub fn coupling_sum(&self) -> f64 {
        self.couplings.iter().map(|c| c.value).sum()
    }

    /// Euclidean norm of the coupling list.
    pub fn coupling_norm(&self) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.value * c.value)
            .sum::<f64>()
            .sqrt()
    }

    /// Symmetric matrix with `J_ij` in both `(i, j)` and `(j, i)`, zero diagonal.
    pub fn coupling_matrix(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n);
        for c in &self.couplings {
            m.set(c.i, c.j, c.value);
        }
        m
    }

    pub fn energy(&self, x: &SpinVector) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.energy_unchecked(x.values()))
    }

    pub(crate) fn energy_unchecked(&self, x: &[i8]) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.value * self.kind.phi(x[c.i], x[c.j]))
            .sum()
    }

    /// Adjacency lists of the coupling graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for c in &self.couplings {
            adj[c.i].push(c.j);
            adj[c.j].push(c.i);
        }
        adj
    }
}
