//! Approximate maximum-entropy sampling by dichotomizing a smoothed Gaussian.
//!
//! Given a correlation matrix `Σ` (PSD, unit diagonal) and a smoothing
//! parameter `β ≥ 0`, the sampler outputs `sign(g)` with `g ~ N(0, Σ + βI)`.
//! Its pair moments are exactly `(2/π) arcsin(Σ_ij / (1 + β))`, and for
//! `β ≥ 3^{-1/2}` its entropy is at least [`entropy_lower_bound`].

use std::f64::consts::{FRAC_2_PI, LN_2};

use serde::{Deserialize, Serialize};

use crate::linalg::{project_psd, seeded_rng, GaussianSampler, SeededRng, SymMatrix};
use crate::model::SpinVector;
use crate::tolerances::Tolerances;
use crate::{Error, Result};

/// Smallest smoothing for which the entropy bound applies, `3^{-1/2}`.
pub fn beta_min() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Smoothing used for ferromagnetic rounding.
pub const FERRO_BETA: f64 = 21.8202;

#[derive(Debug, Clone)]
pub struct DichotomizedGaussianModel {
    sigma: SymMatrix,
    beta: f64,
    sampling_cov: SymMatrix,
    sampler: GaussianSampler,
    below_entropy_hypothesis: bool,
}

impl DichotomizedGaussianModel {
    /// Validates `sigma` (unit diagonal and PSD within `1e-8`; eigenvalues in
    /// `[-1e-8, 0)` are clipped) and prepares the sampler for `Σ + βI`.
    pub fn build(sigma: &SymMatrix, beta: f64) -> Result<Self> {
        let tol = Tolerances::DEFAULT.correlation_validation;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::param(format!(
                "beta = {beta} must be finite and >= 0"
            )));
        }
        if !sigma.is_finite() {
            return Err(Error::param("sigma has non-finite entries"));
        }
        for i in 0..sigma.n() {
            let d = sigma.get(i, i);
            if (d - 1.0).abs() > tol {
                return Err(Error::NonUnitDiagonal { index: i, value: d });
            }
        }
        let min_eigenvalue = sigma.min_eigenvalue()?;
        if min_eigenvalue < -tol {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        let sigma = if min_eigenvalue < 0.0 {
            project_psd(sigma)?
        } else {
            sigma.clone()
        };
        let sampling_cov = sigma.shifted(beta);
        let sampler = GaussianSampler::new(&sampling_cov)?;
        Ok(DichotomizedGaussianModel {
            below_entropy_hypothesis: beta < beta_min(),
            sigma,
            beta,
            sampling_cov,
            sampler,
        })
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sampling_cov(&self) -> &SymMatrix {
        &self.sampling_cov
    }

    pub fn normalization(&self) -> f64 {
        1.0 + self.beta
    }

    /// Set when `β < 3^{-1/2}`, where no entropy guarantee is available.
    pub fn below_entropy_hypothesis(&self) -> bool {
        self.below_entropy_hypothesis
    }

    /// Exact `E[x_i x_j] = (2/π) arcsin(Σ_ij / (1 + β))`.
    pub fn pair_moment(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
        }
        if i == j {
            return Ok(1.0);
        }
        Ok(arcsine_moment(self.sigma.get(i, j) / self.normalization()))
    }

    pub fn pair_moments(&self) -> SymMatrix {
        let s = self.normalization();
        SymMatrix::from_upper_fn(self.n(), |i, j| {
            if i == j {
                1.0
            } else {
                arcsine_moment(self.sigma.get(i, j) / s)
            }
        })
    }

    /// Entropy floor in nats (error below the hypothesis).
    pub fn entropy_floor(&self) -> Result<f64> {
        entropy_lower_bound(self.n(), self.beta)
    }

    /// Infinite reproducible stream of samples for `seed`.
    pub fn stream(&self, seed: u64) -> SampleStream<'_> {
        SampleStream {
            model: self,
            rng: seeded_rng(seed),
            scratch: Vec::new(),
            gaussian: vec![0.0; self.n()],
        }
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<SpinVector>> {
        if count == 0 {
            return Err(Error::param("sample count must be at least 1"));
        }
        Ok(self.stream(seed).take(count).collect())
    }

    /// One draw from an external generator.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> SpinVector {
        SpinVector::from_signs(&self.sampler.draw(rng))
    }

    pub fn moment_sandwich_check(&self) -> SandwichReport {
        moment_sandwich_check(self)
    }
}

pub struct SampleStream<'a> {
    model: &'a DichotomizedGaussianModel,
    rng: SeededRng,
    scratch: Vec<f64>,
    gaussian: Vec<f64>,
}

impl Iterator for SampleStream<'_> {
    type Item = SpinVector;

    fn next(&mut self) -> Option<SpinVector> {
        self.model
            .sampler
            .draw_into(&mut self.rng, &mut self.scratch, &mut self.gaussian);
        // sign(0) = +1
        Some(SpinVector::from_signs(&self.gaussian))
    }
}

/// `(2/π) arcsin(t)`, with `t` clamped into `[-1, 1]`.
#[inline]
pub fn arcsine_moment(t: f64) -> f64 {
    FRAC_2_PI * t.clamp(-1.0, 1.0).asin()
}

/// `n/25 · (3^{1/4}√β − 1)² / (√3 β)`, interpreted in nats.
///
/// Defined for `β ≥ 3^{-1/2}`; the bound is exactly zero at the endpoint.
pub fn entropy_lower_bound(n: usize, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < beta_min() * (1.0 - 1e-12) {
        return Err(Error::BetaBelowHypothesis { beta });
    }
    let gap = 3f64.powf(0.25) * beta.sqrt() - 1.0;
    if gap <= 1e-12 {
        return Ok(0.0);
    }
    Ok(n as f64 / 25.0 * gap * gap / (3f64.sqrt() * beta))
}

/// Same bound in bits.
pub fn entropy_lower_bound_bits(n: usize, beta: f64) -> Result<f64> {
    Ok(entropy_lower_bound(n, beta)? / LN_2)
}

/// `min_{t ∈ [-1,1] \ {0}} (2/π) arcsin(t)/t`, found on a `1e-6` grid
/// together with the `t → 0` limit `2/π`.
pub fn grothendieck_like_constant() -> f64 {
    const STEPS: i64 = 1_000_000;
    let mut best = FRAC_2_PI;
    for k in 1..=STEPS {
        let t = k as f64 / STEPS as f64;
        // the ratio is even in t, so the positive half suffices
        best = best.min(FRAC_2_PI * t.asin() / t);
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    /// Smallest slack over all pairs and both sides (negative means violated).
    pub worst_slack: f64,
    /// Pairs where the sign flipped or either bound failed.
    pub failures: Vec<(usize, usize)>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `sign(m_ij) = sign(Σ_ij)` and
/// `𝒢|Σ_ij|/(1+β) ≤ |m_ij| ≤ |Σ_ij|/(1+β)` for every pair, where `m_ij` is
/// the exact pair moment.
pub fn moment_sandwich_check(model: &DichotomizedGaussianModel) -> SandwichReport {
    const SLACK: f64 = 1e-12;
    let g = FRAC_2_PI;
    let s = model.normalization();
    let n = model.n();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let sigma = model.sigma.get(i, j);
            let m = arcsine_moment(sigma / s);
            let lower = g * sigma.abs() / s;
            let upper = sigma.abs() / s;
            let sign_ok = sigma == 0.0 && m == 0.0 || sigma.signum() == m.signum();
            let slack = (m.abs() - lower).min(upper - m.abs());
            worst = worst.min(slack);
            if !sign_ok || slack < -SLACK {
                failures.push((i, j));
            }
        }
    }
    SandwichReport {
        worst_slack: if worst.is_finite() { worst } else { 0.0 },
        failures,
    }
}

#[derive(Serialize, Deserialize)]
struct CovarianceRecord {
    n: usize,
    #[serde(alias = "M")]
    sigma: Vec<f64>,
}

/// Parses `{"n": 2, "sigma": [1.0, 0.5, 0.5, 1.0]}` (dense row-major).
///
/// The field may also be spelled `M`, so a relaxation solution file loads
/// directly; other fields are ignored. Only symmetry and finiteness are
/// checked here, the rest is left to [`DichotomizedGaussianModel::build`].
pub fn load_covariance(text: &str) -> Result<SymMatrix> {
    let record: CovarianceRecord = serde_json::from_str(text)?;
    if record.n == 0 || record.n > crate::model::MAX_SPINS {
        return Err(Error::field("n", format!("{} out of range", record.n)));
    }
    SymMatrix::from_row_major(record.n, &record.sigma)
        .map_err(|e| Error::field("sigma", e.to_string()))
}

pub fn store_covariance(sigma: &SymMatrix) -> String {
    let record = CovarianceRecord {
        n: sigma.n(),
        sigma: sigma.to_row_major(),
    };
    serde_json::to_string(&record).expect("covariance records always serialize")
}
