use rand::Rng;

use super::{FunctionalKind, IsingInstance};
use crate::linalg::seeded_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDist {
    PlusMinusOne,
    Uniform { lo: f64, hi: f64 },
}

/// Random instance families. All generate [`FunctionalKind::PairProduct`]
/// instances; use [`IsingInstance::with_kind`] for other functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ensemble {
    /// Complete graph, `J_ij ~ U[lo, hi)` with `0 < lo <= hi`.
    FerromagneticUniform { lo: f64, hi: f64 },
    /// Complete graph, `J_ij = ±1` with equal probability.
    SpinGlassPm1,
    /// Each pair present independently with probability `p`.
    ErdosRenyi { p: f64, weights: WeightDist },
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::param(format!("invalid weight range [{lo}, {hi}]")));
    }
    Ok(())
}

pub fn generate(ensemble: Ensemble, n: usize, seed: u64) -> Result<IsingInstance> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    match ensemble {
        Ensemble::FerromagneticUniform { lo, hi } => {
            check_range(lo, hi)?;
            if lo <= 0.0 {
                return Err(Error::param("ferromagnetic weights need lo > 0"));
            }
        }
        Ensemble::ErdosRenyi { p, weights } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("edge probability {p} outside [0, 1]")));
            }
            if let WeightDist::Uniform { lo, hi } = weights {
                check_range(lo, hi)?;
            }
        }
        Ensemble::SpinGlassPm1 => {}
    }

    let mut rng = seeded_rng(seed);
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let value = match ensemble {
                Ensemble::FerromagneticUniform { lo, hi } => uniform(&mut rng, lo, hi),
                Ensemble::SpinGlassPm1 => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Ensemble::ErdosRenyi { p, weights } => {
                    if !rng.random_bool(p) {
                        continue;
                    }
                    match weights {
                        WeightDist::PlusMinusOne => {
                            if rng.random::<bool>() {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        WeightDist::Uniform { lo, hi } => uniform(&mut rng, lo, hi),
                    }
                }
            };
            couplings.push((i, j, value));
        }
    }
    IsingInstance::new(n, FunctionalKind::PairProduct, couplings)
}
