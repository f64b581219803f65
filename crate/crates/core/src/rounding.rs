//! Roundings of a pseudo-moment matrix into genuine distributions on
//! `{-1, 1}^n`, each carrying a certified entropy floor (nats).
//!
//! * uniform: independent fair coins;
//! * dichotomized Gaussian: `sign(g)`, `g ~ N(0, M + βI)`;
//! * scaled quadratic form rounding: `g = (⟨v_i, s⟩)_i ~ N(0, M)`,
//!   `h = g / √(4 ln n)`, bias `r'_i = ½·clip(h_i)` and independent spins with
//!   `P(x_i = 1) = (1 + r'_i)/2`. The halving keeps every bias in `[-½, ½]`,
//!   which pins each spin's conditional entropy at `h₂(3/4)` or more.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dichotomized::{entropy_lower_bound, DichotomizedGaussianModel};
use crate::linalg::{gram_factorize, seeded_rng, GramFactors, SeededRng, SymMatrix};
use crate::model::{IsingInstance, SpinVector};
use crate::relax::check_feasibility;
use crate::{Error, Result};

/// Confidence level `1 − δ` of the Hoeffding intervals is `1 − HOEFFDING_DELTA`.
pub const HOEFFDING_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundingKind {
    Uniform,
    Gw,
    Charikar,
}

impl RoundingKind {
    pub const ALL: [RoundingKind; 3] = [
        RoundingKind::Uniform,
        RoundingKind::Gw,
        RoundingKind::Charikar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoundingKind::Uniform => "uniform",
            RoundingKind::Gw => "gw",
            RoundingKind::Charikar => "charikar",
        }
    }
}

impl fmt::Display for RoundingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoundingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(RoundingKind::Uniform),
            "gw" => Ok(RoundingKind::Gw),
            "charikar" => Ok(RoundingKind::Charikar),
            other => Err(Error::param(format!(
                "unknown rounding `{other}` (expected uniform, gw or charikar)"
            ))),
        }
    }
}

/// Binary entropy in bits.
pub fn binary_entropy_bits(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBound {
    pub bits: f64,
    pub nats: f64,
}

/// `(2 − ¾ log₂ 3)·n` bits, i.e. `n·h₂(3/4)`.
pub fn charikar_entropy_bound(n: usize) -> EntropyBound {
    let bits = (2.0 - 0.75 * 3f64.log2()) * n as f64;
    EntropyBound {
        bits,
        nats: bits * LN_2,
    }
}

/// Quadratic form rounding of a pseudo-moment matrix.
#[derive(Debug, Clone)]
pub struct QuadraticFormRounding {
    gram: GramFactors,
    threshold: f64,
}

/// Output of one shared-randomness draw: the unscaled rounding, the halved
/// rounding, and the halved biases.
#[derive(Debug, Clone)]
pub struct PairedDraw {
    pub unscaled: SpinVector,
    pub scaled: SpinVector,
    pub scaled_bias: Vec<f64>,
}

impl QuadraticFormRounding {
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let n = m.n();
        if n < 2 {
            return Err(Error::param("quadratic form rounding needs n >= 2"));
        }
        let report = check_feasibility(m, false)?;
        if !report.feasible {
            return Err(Error::param(format!(
                "pseudo-moment matrix is infeasible: {}",
                report.residuals
            )));
        }
        Ok(QuadraticFormRounding {
            gram: gram_factorize(m)?,
            threshold: (4.0 * (n as f64).ln()).sqrt(),
        })
    }

    pub fn n(&self) -> usize {
        self.gram.n()
    }

    /// `T = √(4 ln n)`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn gram(&self) -> &GramFactors {
        &self.gram
    }

    /// Biases `scale · clip(⟨v_i, s⟩ / T)` where `clip` maps `|h| > 1` to
    /// `sign(h)`. `scale = 1` is the unscaled rounding, `0.5` the halved one.
    pub fn biases(&self, s: &[f64], scale: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.n()];
        self.gram.project(s, &mut g);
        g.iter()
            .map(|gi| {
                let h = gi / self.threshold;
                let r = if h.abs() > 1.0 { h.signum() } else { h };
                scale * r
            })
            .collect()
    }

    fn gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.gram.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect()
    }

    /// One draw of the halved rounding, with its biases.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (SpinVector, Vec<f64>) {
        let bias = self.biases(&self.gaussian(rng), 0.5);
        let x = bias
            .iter()
            .map(|r| {
                if rng.random::<f64>() < 0.5 * (1.0 + r) {
                    1
                } else {
                    -1
                }
            })
            .collect();
        (SpinVector::from_raw(x), bias)
    }

    /// Conditional-bias draw only (no spins).
    pub fn draw_bias<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.biases(&self.gaussian(rng), 0.5)
    }

    /// Unscaled and halved roundings driven by the same Gaussian vector and
    /// the same per-spin uniforms.
    pub fn draw_paired<R: Rng + ?Sized>(&self, rng: &mut R) -> PairedDraw {
        let s = self.gaussian(rng);
        let full = self.biases(&s, 1.0);
        let half = self.biases(&s, 0.5);
        let mut unscaled = Vec::with_capacity(full.len());
        let mut scaled = Vec::with_capacity(full.len());
        for (r, r_half) in full.iter().zip(&half) {
            let u: f64 = rng.random();
            unscaled.push(if u < 0.5 * (1.0 + r) { 1 } else { -1 });
            scaled.push(if u < 0.5 * (1.0 + r_half) { 1 } else { -1 });
        }
        PairedDraw {
            unscaled: SpinVector::from_raw(unscaled),
            scaled: SpinVector::from_raw(scaled),
            scaled_bias: half,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Descriptor {
    Uniform { n: usize },
    Gw(DichotomizedGaussianModel),
    CharikarScaled(QuadraticFormRounding),
}

#[derive(Debug, Clone)]
pub struct RoundedDistribution {
    pub descriptor: Descriptor,
    /// Certified lower bound on the entropy, in nats.
    pub entropy_floor: f64,
    pub seed_protocol: &'static str,
}

const UNIFORM_PROTOCOL: &str =
    "ChaCha8 seeded from the u64 seed; per draw, one uniform bool per spin in index order";
const GW_PROTOCOL: &str = "ChaCha8 seeded from the u64 seed; per draw, rank(M + beta I) standard \
     normals mapped through the eigen square root, then sign (0 -> +1)";
const CHARIKAR_PROTOCOL: &str = "ChaCha8 seeded from the u64 seed; per draw, rank(M) standard \
     normals s, biases r' = clip(<v_i, s>/T)/2, then one uniform u_i per spin with x_i = +1 iff \
     u_i < (1 + r'_i)/2";

impl RoundedDistribution {
    pub fn kind(&self) -> RoundingKind {
        match self.descriptor {
            Descriptor::Uniform { .. } => RoundingKind::Uniform,
            Descriptor::Gw(_) => RoundingKind::Gw,
            Descriptor::CharikarScaled(_) => RoundingKind::Charikar,
        }
    }

    pub fn n(&self) -> usize {
        match &self.descriptor {
            Descriptor::Uniform { n } => *n,
            Descriptor::Gw(model) => model.n(),
            Descriptor::CharikarScaled(q) => q.n(),
        }
    }

    /// Exact `E[x_i x_j]` where a closed form exists.
    pub fn pair_moment(&self, i: usize, j: usize) -> Option<f64> {
        match &self.descriptor {
            Descriptor::Uniform { .. } => Some(if i == j { 1.0 } else { 0.0 }),
            Descriptor::Gw(model) => model.pair_moment(i, j).ok(),
            Descriptor::CharikarScaled(_) => None,
        }
    }

    pub fn draw(&self, rng: &mut SeededRng) -> SpinVector {
        match &self.descriptor {
            Descriptor::Uniform { n } => SpinVector::from_raw(
                (0..*n)
                    .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                    .collect(),
            ),
            Descriptor::Gw(model) => model.draw(rng),
            Descriptor::CharikarScaled(q) => q.draw(rng).0,
        }
    }

    pub fn sample(&self, count: usize, seed: u64) -> Vec<SpinVector> {
        let mut rng = seeded_rng(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

pub fn round_uniform(n: usize) -> Result<RoundedDistribution> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    Ok(RoundedDistribution {
        descriptor: Descriptor::Uniform { n },
        entropy_floor: n as f64 * LN_2,
        seed_protocol: UNIFORM_PROTOCOL,
    })
}

/// Dichotomized Gaussian rounding of a feasible `M`. Below `β = 3^{-1/2}` no
/// entropy bound is available and the floor is the trivial 0.
pub fn round_gw(m: &SymMatrix, beta: f64) -> Result<RoundedDistribution> {
    let report = check_feasibility(m, false)?;
    if !report.feasible {
        return Err(Error::param(format!(
            "pseudo-moment matrix is infeasible: {}",
            report.residuals
        )));
    }
    let model = DichotomizedGaussianModel::build(m, beta)?;
    let entropy_floor = if model.below_entropy_hypothesis() {
        0.0
    } else {
        entropy_lower_bound(model.n(), beta)?
    };
    Ok(RoundedDistribution {
        descriptor: Descriptor::Gw(model),
        entropy_floor,
        seed_protocol: GW_PROTOCOL,
    })
}

pub fn charikar_distribution(m: &SymMatrix) -> Result<RoundedDistribution> {
    let q = QuadraticFormRounding::new(m)?;
    Ok(RoundedDistribution {
        entropy_floor: charikar_entropy_bound(q.n()).nats,
        descriptor: Descriptor::CharikarScaled(q),
        seed_protocol: CHARIKAR_PROTOCOL,
    })
}

/// Builds the scaled quadratic form rounding and takes one draw from `seed`.
pub fn round_charikar_scaled(
    m: &SymMatrix,
    seed: u64,
) -> Result<(SpinVector, RoundedDistribution)> {
    let dist = charikar_distribution(m)?;
    let x = dist.draw(&mut seeded_rng(seed));
    Ok((x, dist))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsObjectiveEstimate {
    /// Expected energy (exact or Monte Carlo).
    pub energy: f64,
    /// Hoeffding interval for the energy; degenerate when exact.
    pub ci: (f64, f64),
    pub entropy_floor: f64,
    /// `energy + entropy_floor`.
    pub objective: f64,
    pub exact_energy: bool,
    pub samples: usize,
}

fn exact_estimate(energy: f64, floor: f64) -> GibbsObjectiveEstimate {
    GibbsObjectiveEstimate {
        energy,
        ci: (energy, energy),
        entropy_floor: floor,
        objective: energy + floor,
        exact_energy: true,
        samples: 0,
    }
}

/// `Σ J_ij E[φ_ij] + entropy floor` for a rounded distribution.
///
/// Uniform and dichotomized-Gaussian energies are closed form. For the
/// quadratic form rounding each draw contributes its conditional energy
/// `Σ J_ij E[φ_ij | r']` (using `E[x_i x_j | r'] = r'_i r'_j`), averaged over
/// `samples` draws, with a two-sided Hoeffding interval at level
/// `1 − HOEFFDING_DELTA`.
pub fn rounded_gibbs_objective(
    instance: &IsingInstance,
    dist: &RoundedDistribution,
    samples: usize,
    seed: u64,
) -> Result<GibbsObjectiveEstimate> {
    if dist.n() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: dist.n(),
        });
    }
    let kind = instance.kind();
    let floor = dist.entropy_floor;
    match &dist.descriptor {
        Descriptor::Uniform { .. } | Descriptor::Gw(_) => {
            let energy = instance
                .couplings()
                .iter()
                .map(|c| {
                    let m = dist.pair_moment(c.i, c.j).expect("closed form exists");
                    c.value * kind.expectation_from_moment(m)
                })
                .sum();
            Ok(exact_estimate(energy, floor))
        }
        Descriptor::CharikarScaled(q) => {
            if samples == 0 {
                return Err(Error::param("sample count must be at least 1"));
            }
            if instance.couplings().is_empty() {
                return Ok(exact_estimate(0.0, floor));
            }
            let mut rng = seeded_rng(seed);
            let mut total = 0.0;
            for _ in 0..samples {
                let r = q.draw_bias(&mut rng);
                total += instance
                    .couplings()
                    .iter()
                    .map(|c| c.value * kind.expectation_from_moment(r[c.i] * r[c.j]))
                    .sum::<f64>();
            }
            let energy = total / samples as f64;
            // r'_i r'_j ∈ [-1/4, 1/4]
            let (lo, hi) = instance.couplings().iter().fold((0.0, 0.0), |(lo, hi), c| {
                let a = c.value * kind.expectation_from_moment(-0.25);
                let b = c.value * kind.expectation_from_moment(0.25);
                (lo + a.min(b), hi + a.max(b))
            });
            let half = (hi - lo) * ((2.0 / HOEFFDING_DELTA).ln() / (2.0 * samples as f64)).sqrt();
            Ok(GibbsObjectiveEstimate {
                energy,
                ci: (energy - half, energy + half),
                entropy_floor: floor,
                objective: energy + floor,
                exact_energy: false,
                samples,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dichotomized::FERRO_BETA;
    use crate::model::{generate, Ensemble, FunctionalKind};
    use std::f64::consts::FRAC_2_PI;

    #[test]
    fn uniform_examples() {
        let u = round_uniform(1).unwrap();
        assert_eq!(u.entropy_floor, LN_2);
        let u = round_uniform(5).unwrap();
        assert_eq!(u.pair_moment(1, 3), Some(0.0));
        let sq = IsingInstance::new(2, FunctionalKind::SquaredDifference, [(0, 1, 1.0)]).unwrap();
        let u2 = round_uniform(2).unwrap();
        let est = rounded_gibbs_objective(&sq, &u2, 1, 0).unwrap();
        assert_eq!(est.energy, 2.0);
    }

    #[test]
    fn uniform_objective_closed_forms() {
        let inst = generate(Ensemble::SpinGlassPm1, 6, 2).unwrap();
        let est = rounded_gibbs_objective(&inst, &round_uniform(6).unwrap(), 1, 0).unwrap();
        assert_eq!(est.objective, 6.0 * LN_2);

        let sq = generate(Ensemble::FerromagneticUniform { lo: 0.1, hi: 2.0 }, 6, 2)
            .unwrap()
            .with_kind(FunctionalKind::SquaredDifference);
        let est = rounded_gibbs_objective(&sq, &round_uniform(6).unwrap(), 1, 0).unwrap();
        assert!((est.objective - (2.0 * sq.coupling_sum() + 6.0 * LN_2)).abs() < 1e-12);
    }

    #[test]
    fn gw_examples() {
        let d = round_gw(&SymMatrix::identity(3), 1.0).unwrap();
        assert_eq!(d.pair_moment(0, 2), Some(0.0));

        let d = round_gw(&SymMatrix::ones(2), FERRO_BETA).unwrap();
        let m = d.pair_moment(0, 1).unwrap();
        assert!((m - 0.027907).abs() < 1e-6);
        assert!((1.0 / (1.0 + FERRO_BETA) - 0.043821).abs() < 1e-6);
        assert!((FRAC_2_PI / (1.0 + FERRO_BETA)..=1.0 / (1.0 + FERRO_BETA)).contains(&m));

        let inst = IsingInstance::new(2, FunctionalKind::PairProduct, [(0, 1, 1.0)]).unwrap();
        let est = rounded_gibbs_objective(&inst, &d, 1, 0).unwrap();
        assert!((est.energy - 0.027907).abs() < 1e-6);
        assert!((est.entropy_floor - 0.056092).abs() < 1e-5);

        let bad = SymMatrix::from_row_major(2, &[1.0, 1.5, 1.5, 1.0]).unwrap();
        assert!(round_gw(&bad, 1.0).is_err());
    }

    #[test]
    fn charikar_bound_values() {
        let b = charikar_entropy_bound(1);
        assert!((b.bits - 0.81128).abs() < 1e-5);
        assert!((b.nats - 0.56234).abs() < 1e-5);
        assert!((charikar_entropy_bound(100).bits - 81.128).abs() < 1e-3);
        assert!((b.bits - binary_entropy_bits(0.75)).abs() < 1e-12);
    }

    #[test]
    fn charikar_biases_are_halved_and_bounded() {
        let inst = generate(Ensemble::SpinGlassPm1, 8, 1).unwrap();
        let sol = crate::relax::solve_relaxation(&inst, &Default::default()).unwrap();
        let (x, dist) = round_charikar_scaled(&sol.m, 3).unwrap();
        assert_eq!(x.len(), 8);
        let Descriptor::CharikarScaled(q) = &dist.descriptor else {
            unreachable!()
        };
        assert!((q.threshold() - (4.0 * 8f64.ln()).sqrt()).abs() < 1e-15);
        let mut rng = seeded_rng(4);
        for _ in 0..10_000 {
            let p = q.draw_paired(&mut rng);
            assert!(p.scaled_bias.iter().all(|r| r.abs() <= 0.5));
        }
    }

    #[test]
    fn charikar_requires_two_spins_and_feasibility() {
        assert!(round_charikar_scaled(&SymMatrix::identity(1), 0).is_err());
        let bad = SymMatrix::from_row_major(2, &[1.0, 1.5, 1.5, 1.0]).unwrap();
        assert!(round_charikar_scaled(&bad, 0).is_err());
    }

    #[test]
    fn charikar_identity_is_uncorrelated() {
        let dist = charikar_distribution(&SymMatrix::identity(2)).unwrap();
        let count = 1_000_000;
        let mut rng = seeded_rng(12);
        let mut sum = 0i64;
        for _ in 0..count {
            let x = dist.draw(&mut rng);
            sum += i64::from(x.values()[0] * x.values()[1]);
        }
        let se = 1.0 / (count as f64).sqrt();
        assert!((sum as f64 / count as f64).abs() < 4.0 * se);
    }

    #[test]
    fn rounding_names_parse() {
        for k in RoundingKind::ALL {
            assert_eq!(k.name().parse::<RoundingKind>().unwrap(), k);
        }
        assert!("naor".parse::<RoundingKind>().is_err());
    }
}
