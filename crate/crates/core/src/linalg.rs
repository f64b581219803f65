//! Dense symmetric matrix primitives.
//!
//! Everything here is dense and sized for desk-scale problems (n up to a few
//! hundred). The eigensolver is nalgebra's symmetric QR iteration; the rest
//! (PSD projection, Gram factors, correlated Gaussian draws) is built on it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tolerances::Tolerances;
use crate::{Error, Result};

/// Deterministic generator used for every seeded stream in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// A real symmetric matrix. Writes go to both `(i, j)` and `(j, i)`, so the
/// two triangles are always bitwise equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn ones(n: usize) -> Self {
        SymMatrix(DMatrix::from_element(n, n, 1.0))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    /// Reads a dense row-major array. The two triangles may differ by at most
    /// `1e-9 · max(1, max|a|)`; the upper triangle wins.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite matrix entry at ({}, {})",
                bad / n.max(1),
                bad % n.max(1)
            )));
        }
        let scale = data.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-9 * scale {
                    return Err(Error::param(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self::from_upper_fn(n, |i, j| data[i * n + j]))
    }

    /// Symmetrizes an arbitrary square matrix as `(A + Aᵀ) / 2`.
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SymMatrix requires a square matrix");
        let n = m.nrows();
        Self::from_upper_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[(i, j)] = value;
        self.0[(j, i)] = value;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n(), other.n());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix(&self.0 * alpha)
    }

    /// `self + alpha * I`.
    pub fn shifted(&self, alpha: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += alpha;
        }
        SymMatrix(m)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        if self.n() == 0 {
            return Ok(0.0);
        }
        let eig = sym_eigen(self)?;
        Ok(eig.eigenvalues[self.n() - 1])
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues sorted in descending order
/// and eigenvectors stored as the matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn reassemble(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let w = f(self.eigenvalues[k]);
            scaled.column_mut(k).scale_mut(w);
        }
        SymMatrix::from_dmatrix(&(scaled * self.eigenvectors.transpose()))
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reassemble(|l| l)
    }
}

pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.n();
    if !a.is_finite() {
        return Err(Error::param("eigendecomposition of a non-finite matrix"));
    }
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS).ok_or(
        Error::EigenNotConverged {
            iterations: EIGEN_MAX_SWEEPS,
            n,
            max_abs: a.max_abs(),
            frobenius: a.frobenius(),
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Frobenius-nearest PSD matrix: negative eigenvalues are clipped to zero.
pub fn project_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(a)?;
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(a.clone());
    }
    Ok(eig.reassemble(|l| l.max(0.0)))
}

/// Vectors `v_1..v_n` (rows of `vectors`) with `⟨v_i, v_j⟩ = A_ij`.
#[derive(Debug, Clone)]
pub struct GramFactors {
    vectors: DMatrix<f64>,
}

impl GramFactors {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    /// Dimension of the vectors (number of retained eigen-directions).
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.row(i).iter().copied().collect()
    }

    pub fn inner(&self, i: usize, j: usize) -> f64 {
        self.vectors.row(i).dot(&self.vectors.row(j))
    }

    pub fn gram_matrix(&self) -> SymMatrix {
        SymMatrix::from_upper_fn(self.n(), |i, j| self.inner(i, j))
    }

    /// `out_i = ⟨v_i, s⟩` for `s` of length [`GramFactors::dim`].
    pub fn project(&self, s: &[f64], out: &mut [f64]) {
        debug_assert_eq!(s.len(), self.dim());
        debug_assert_eq!(out.len(), self.n());
        let d = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|k| self.vectors[(i, k)] * s[k]).sum();
        }
    }
}

/// Factors a PSD matrix through its eigendecomposition. Eigenvalues in
/// `[-gram_indefinite, 0)` are treated as zero.
pub fn gram_factorize(a: &SymMatrix) -> Result<GramFactors> {
    let tol = Tolerances::DEFAULT;
    let n = a.n();
    let eig = sym_eigen(a)?;
    if n > 0 && eig.eigenvalues[n - 1] < -tol.gram_indefinite {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.eigenvalues[n - 1],
        });
    }
    let kept: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    let mut vectors = DMatrix::zeros(n, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            vectors[(i, col)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    Ok(GramFactors { vectors })
}

/// Draws `N(0, cov)` vectors as `L s` with `L Lᵀ = cov` and `s ~ N(0, I)`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: GramFactors,
    jittered: bool,
}

impl GaussianSampler {
    pub fn new(cov: &SymMatrix) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        let limit = tol.eigen_reconstruction * cov.max_abs().max(1.0);
        let factor = gram_factorize(cov)?;
        let err = factor.gram_matrix().max_abs_diff(cov);
        if err <= limit {
            return Ok(GaussianSampler {
                factor,
                jittered: false,
            });
        }
        let jittered = cov.shifted(tol.sampling_jitter);
        let factor = gram_factorize(&jittered)?;
        let err = factor.gram_matrix().max_abs_diff(&jittered);
        if err <= limit {
            Ok(GaussianSampler {
                factor,
                jittered: true,
            })
        } else {
            Err(Error::Factorization { error: err })
        }
    }

    pub fn n(&self) -> usize {
        self.factor.n()
    }

    /// Whether the diagonal jitter had to be applied.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// Draws one vector into `out`, using `scratch` (length ≥ factor rank) for
    /// the standard normal draw.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Vec<f64>, out: &mut [f64]) {
        scratch.clear();
        scratch.extend((0..self.factor.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.factor.project(scratch, out);
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        let mut scratch = Vec::with_capacity(self.factor.dim());
        self.draw_into(rng, &mut scratch, &mut out);
        out
    }
}

pub fn sample_gaussian(cov: &SymMatrix, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let sampler = GaussianSampler::new(cov)?;
    let mut rng = seeded_rng(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}
