//! Exhaustive enumeration over `{-1, 1}^n`.
//!
//! State `k` is the configuration whose spin `i` is `2·bit_i(k) − 1`. All sums
//! run in index order, so results are reproducible bit for bit.

use std::f64::consts::PI;

use rand::Rng;

use crate::linalg::{seeded_rng, SymMatrix};
use crate::model::{FunctionalKind, IsingInstance, SpinVector};
use crate::tolerances::Tolerances;
use crate::{Error, Result};

/// Largest `n` for which full tables and partition functions are built.
pub const ENUMERATION_LIMIT: usize = 22;
/// Largest `n` for max-entropy fitting (each step enumerates every state).
pub const FIT_LIMIT: usize = 15;

fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::TooLarge { n, limit })
    } else {
        Ok(())
    }
}

#[inline]
fn spin(state: usize, i: usize) -> i8 {
    if state >> i & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Energy of every state, in state order.
pub fn state_energies(instance: &IsingInstance) -> Result<Vec<f64>> {
    let n = instance.n();
    guard(n, ENUMERATION_LIMIT)?;
    let kind = instance.kind();
    let couplings = instance.couplings();
    Ok((0..1usize << n)
        .map(|s| {
            couplings
                .iter()
                .map(|c| c.value * kind.phi(spin(s, c.i), spin(s, c.j)))
                .sum()
        })
        .collect())
}

/// `max + ln Σ exp(e − max)`.
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|e| (e - max).exp()).sum::<f64>().ln()
}

pub fn exact_log_partition(instance: &IsingInstance) -> Result<f64> {
    Ok(log_sum_exp(&state_energies(instance)?))
}

/// Probability table over the `2^n` states.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    n: usize,
    probabilities: Vec<f64>,
}

impl DistributionTable {
    pub fn new(n: usize, probabilities: Vec<f64>) -> Result<Self> {
        guard(n, ENUMERATION_LIMIT)?;
        if probabilities.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: probabilities.len(),
            });
        }
        if let Some(k) = probabilities
            .iter()
            .position(|p| !(*p >= 0.0 && p.is_finite()))
        {
            return Err(Error::param(format!(
                "probability of state {k} is {}",
                probabilities[k]
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > Tolerances::DEFAULT.table_normalization {
            return Err(Error::param(format!("probabilities sum to {total}")));
        }
        Ok(DistributionTable { n, probabilities })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::param("weights must have a positive finite sum"));
        }
        let p = weights.into_iter().map(|w| w / total).collect();
        Self::new_unchecked_sum(n, p)
    }

    // Normalized weights may miss 1 by a few ulps times 2^n; tighten that up
    // by folding the residue into the largest entry.
    fn new_unchecked_sum(n: usize, mut p: Vec<f64>) -> Result<Self> {
        let total: f64 = p.iter().sum();
        if let Some(k) = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])) {
            p[k] += 1.0 - total;
        }
        Self::new(n, p)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        guard(n, ENUMERATION_LIMIT)?;
        Self::new(n, vec![1.0 / (1u64 << n) as f64; 1 << n])
    }

    pub fn point_mass(x: &SpinVector) -> Result<Self> {
        let n = x.len();
        guard(n, ENUMERATION_LIMIT)?;
        let mut p = vec![0.0; 1 << n];
        p[x.index() as usize] = 1.0;
        Self::new(n, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, x: &SpinVector) -> f64 {
        self.probabilities[x.index() as usize]
    }

    /// Shannon entropy in nats, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self
            .probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Draws states by inverse CDF.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<SpinVector> {
        let mut cdf = Vec::with_capacity(self.probabilities.len());
        let mut acc = 0.0;
        for p in &self.probabilities {
            acc += p;
            cdf.push(acc);
        }
        let last = cdf.len() - 1;
        let mut rng = seeded_rng(seed);
        (0..count)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cdf.partition_point(|&c| c <= u).min(last);
                SpinVector::from_index(k as u64, self.n)
            })
            .collect()
    }
}

pub fn gibbs_distribution(instance: &IsingInstance) -> Result<DistributionTable> {
    let energies = state_energies(instance)?;
    let log_z = log_sum_exp(&energies);
    let p = energies.iter().map(|e| (e - log_z).exp()).collect();
    DistributionTable::new_unchecked_sum(instance.n(), p)
}

/// Expected energy `Σ_{i<j} J_ij E[φ_ij]` under a table.
pub fn exact_energy(instance: &IsingInstance, table: &DistributionTable) -> Result<f64> {
    if table.n() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: table.n(),
        });
    }
    let energies = state_energies(instance)?;
    Ok(energies
        .iter()
        .zip(&table.probabilities)
        .map(|(e, p)| e * p)
        .sum())
}

/// Gibbs variational objective `Σ J E[φ] + H` of an arbitrary table.
pub fn exact_gibbs_objective(instance: &IsingInstance, table: &DistributionTable) -> Result<f64> {
    Ok(exact_energy(instance, table)? + table.entropy())
}

pub fn exact_pair_moments(table: &DistributionTable) -> SymMatrix {
    let n = table.n();
    let mut m = SymMatrix::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = table
                .probabilities
                .iter()
                .enumerate()
                .map(|(s, p)| p * f64::from(spin(s, i) * spin(s, j)))
                .sum();
            m.set(i, j, v);
        }
    }
    m
}

/// Two-spin table of `(sign g_1, sign g_2)` with `g` standard bivariate
/// normal of correlation `rho`.
pub fn exact_two_dim_dichotomized_table(rho: f64) -> Result<DistributionTable> {
    if rho.is_nan() || rho.abs() > 1.0 {
        return Err(Error::param(format!("correlation {rho} outside [-1, 1]")));
    }
    let shift = rho.asin() / (2.0 * PI);
    let equal = 0.25 + shift;
    let differ = 0.25 - shift;
    // states: 0 = (−,−), 1 = (+,−), 2 = (−,+), 3 = (+,+)
    DistributionTable::new(2, vec![equal, differ.max(0.0), differ.max(0.0), equal])
}

#[derive(Debug, Clone, Copy)]
pub struct MaxEntConfig {
    /// Stop when the gradient ∞-norm drops below this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for MaxEntConfig {
    fn default() -> Self {
        MaxEntConfig {
            tol: 1e-9,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxEntFit {
    /// Fitted pair potentials (zero potentials omitted).
    pub couplings: IsingInstance,
    /// Entropy of the fitted distribution, `log Z(J*) − Σ J*_ij target_ij`.
    pub entropy: f64,
    pub achieved: SymMatrix,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct DualProblem {
    n: usize,
    pairs: Vec<(usize, usize)>,
    target: Vec<f64>,
}

impl DualProblem {
    fn energies(&self, theta: &[f64]) -> Vec<f64> {
        (0..1usize << self.n)
            .map(|s| {
                self.pairs
                    .iter()
                    .zip(theta)
                    .map(|(&(i, j), t)| t * f64::from(spin(s, i) * spin(s, j)))
                    .sum()
            })
            .collect()
    }

    /// Dual value and gradient (model moments minus target).
    fn evaluate(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let energies = self.energies(theta);
        let log_z = log_sum_exp(&energies);
        let p: Vec<f64> = energies.iter().map(|e| (e - log_z).exp()).collect();
        let grad = self
            .pairs
            .iter()
            .zip(&self.target)
            .map(|(&(i, j), t)| {
                let m: f64 = p
                    .iter()
                    .enumerate()
                    .map(|(s, q)| q * f64::from(spin(s, i) * spin(s, j)))
                    .sum();
                m - t
            })
            .collect();
        let linear: f64 = theta.iter().zip(&self.target).map(|(a, b)| a * b).sum();
        (log_z - linear, grad)
    }
}

/// Fits the pairwise exponential family whose moments match `target` by
/// gradient descent on the convex dual `log Z(J) − Σ J_ij target_ij`.
///
/// Each iteration starts from step `1/n` and halves it until the Armijo
/// condition holds. Targets on the boundary of the marginal polytope have no
/// finite solution and come back with `converged == false`.
pub fn fit_maxent(target: &SymMatrix, config: MaxEntConfig) -> Result<MaxEntFit> {
    let n = target.n();
    if n == 0 {
        return Err(Error::param("empty target"));
    }
    guard(n, FIT_LIMIT)?;
    if !target.is_finite() {
        return Err(Error::param("target moments must be finite"));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let problem = DualProblem {
        n,
        target: pairs.iter().map(|&(i, j)| target.get(i, j)).collect(),
        pairs,
    };

    let base_step = 1.0 / n as f64;
    let mut theta = vec![0.0; problem.pairs.len()];
    let (mut value, mut grad) = problem.evaluate(&theta);
    let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut iterations = 0;
    let mut converged = inf_norm(&grad) < config.tol;
    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let sq: f64 = grad.iter().map(|g| g * g).sum();
        let mut step = base_step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let (v, g) = problem.evaluate(&trial);
            // Near the optimum the Armijo decrease drops below the resolution
            // of `value`; fall back to requiring a smaller gradient there.
            let flat = (value - v).abs() <= 8.0 * f64::EPSILON * value.abs().max(1.0);
            if v <= value - 0.5 * step * sq || (flat && inf_norm(&g) < inf_norm(&grad)) {
                accepted = Some((trial, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((t, v, g)) = accepted else { break };
        theta = t;
        value = v;
        grad = g;
        converged = inf_norm(&grad) < config.tol;
    }

    let couplings = IsingInstance::new(
        n,
        FunctionalKind::PairProduct,
        problem
            .pairs
            .iter()
            .zip(&theta)
            .map(|(&(i, j), &t)| (i, j, t)),
    )?;
    let achieved = exact_pair_moments(&gibbs_distribution(&couplings)?);
    Ok(MaxEntFit {
        couplings,
        entropy: value,
        achieved,
        gradient_norm: inf_norm(&grad),
        iterations,
        converged,
    })
}
