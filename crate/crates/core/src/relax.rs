//! Degree-2 pseudo-moment relaxation of the Gibbs variational principle.
//!
//! The variables are the pair pseudo-moments `M_ij = Ẽ[x_i x_j]`. First
//! moments are fixed at zero (every objective here is even under `x → −x`),
//! so the moment matrix is the bordered `[[1, 0ᵀ], [0, M]]` and its PSD
//! constraint reduces to `M ⪰ 0`. Feasible set: `M ⪰ 0`, `diag(M) = 1`, and in
//! ferromagnetic mode additionally `M_ij ≥ 0`.
//!
//! The entropy is replaced by the constant `n`, so the objective is
//! `Σ_{i<j} J_ij Ẽ[φ_ij] + n`. Note that `n` exceeds the largest possible
//! entropy `n ln 2` (in nats); the relaxation is correspondingly loose.

use serde::{Deserialize, Serialize};

use crate::linalg::{project_psd, SymMatrix};
use crate::model::{FunctionalKind, IsingInstance};
use crate::tolerances::Tolerances;
use crate::{Error, Result};

/// Consecutive small-change iterations required before declaring convergence.
pub const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Gradient step; `None` means `1 / ‖J‖` (Euclidean norm of the couplings).
    pub step_size: Option<f64>,
    pub max_iterations: usize,
    /// Relative objective change regarded as "no progress".
    pub objective_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub dykstra_iterations: usize,
    /// Add the `M_ij ≥ 0` constraints.
    pub ferro: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step_size: None,
            max_iterations: 20_000,
            objective_tolerance: 1e-7,
            feasibility_tolerance: Tolerances::DEFAULT.feasibility,
            dykstra_iterations: 200,
            ferro: false,
        }
    }
}

impl SolverConfig {
    pub fn ferro() -> Self {
        SolverConfig {
            ferro: true,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(s) = self.step_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param(format!("step size {s} must be positive")));
            }
        }
        if self.max_iterations == 0 || self.dykstra_iterations == 0 {
            return Err(Error::param("iteration limits must be positive"));
        }
        if !(self.objective_tolerance > 0.0 && self.feasibility_tolerance > 0.0) {
            return Err(Error::param("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Constraint residuals of a candidate pseudo-moment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Smallest eigenvalue of the bordered moment matrix, `min(1, λ_min(M))`.
    pub min_eigenvalue: f64,
    pub max_diag_deviation: f64,
    /// `min(0, min_{i≠j} M_ij)`; only constrained in ferromagnetic mode.
    pub most_negative_entry: f64,
}

impl Residuals {
    pub fn psd_violation(&self) -> f64 {
        (-self.min_eigenvalue).max(0.0)
    }

    /// Largest constraint violation.
    pub fn worst(&self, ferro: bool) -> f64 {
        let mut w = self.psd_violation().max(self.max_diag_deviation);
        if ferro {
            w = w.max(-self.most_negative_entry);
        }
        w
    }

    pub fn passes(&self, ferro: bool, tol: f64) -> bool {
        self.worst(ferro) <= tol
    }
}

impl std::fmt::Display for Residuals {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "min eigenvalue {:e}, max |diag - 1| {:e}, most negative entry {:e}",
            self.min_eigenvalue, self.max_diag_deviation, self.most_negative_entry
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub residuals: Residuals,
    pub ferro: bool,
    pub tolerance: f64,
    pub feasible: bool,
}

pub fn residuals(m: &SymMatrix) -> Result<Residuals> {
    let n = m.n();
    let min_eig = m.min_eigenvalue()?.min(1.0);
    let mut diag = 0.0f64;
    let mut neg = 0.0f64;
    for i in 0..n {
        diag = diag.max((m.get(i, i) - 1.0).abs());
        for j in (i + 1)..n {
            neg = neg.min(m.get(i, j));
        }
    }
    Ok(Residuals {
        min_eigenvalue: if n == 0 { 1.0 } else { min_eig },
        max_diag_deviation: diag,
        most_negative_entry: neg,
    })
}

pub fn check_feasibility(m: &SymMatrix, ferro: bool) -> Result<FeasibilityReport> {
    let tolerance = Tolerances::DEFAULT.feasibility;
    let residuals = residuals(m)?;
    Ok(FeasibilityReport {
        residuals,
        ferro,
        tolerance,
        feasible: residuals.passes(ferro, tolerance),
    })
}

pub fn relax_objective(instance: &IsingInstance, m: &SymMatrix) -> Result<f64> {
    if m.n() != instance.n() {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: m.n(),
        });
    }
    let kind = instance.kind();
    let energy: f64 = instance
        .couplings()
        .iter()
        .map(|c| c.value * kind.expectation_from_moment(m.get(c.i, c.j)))
        .sum();
    Ok(energy + instance.n() as f64)
}

/// Projection onto `{diag = 1}` (∩ `{M_ij ≥ 0}` in ferro mode); both act
/// entrywise so their intersection is projected in one pass.
fn project_entrywise(m: &SymMatrix, ferro: bool) -> SymMatrix {
    let n = m.n();
    SymMatrix::from_upper_fn(n, |i, j| {
        if i == j {
            1.0
        } else if ferro {
            m.get(i, j).max(0.0)
        } else {
            m.get(i, j)
        }
    })
}

/// Maps a nearly feasible matrix onto the feasible set: clip to PSD, then
/// rescale to unit diagonal with `D^{-1/2} A D^{-1/2}` (which preserves PSD).
fn polish(m: &SymMatrix, ferro: bool) -> Result<SymMatrix> {
    let psd = project_psd(m)?;
    let n = psd.n();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = psd.get(i, i);
            if d > f64::MIN_POSITIVE {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(SymMatrix::from_upper_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            let v = psd.get(i, j) * scale[i] * scale[j];
            let v = v.clamp(-1.0, 1.0);
            if ferro {
                v.max(0.0)
            } else {
                v
            }
        }
    }))
}

fn project_feasible_with(
    m: &SymMatrix,
    ferro: bool,
    max_iterations: usize,
    tol: f64,
) -> Result<SymMatrix> {
    if !m.is_finite() {
        return Err(Error::param("cannot project a non-finite matrix"));
    }
    let n = m.n();
    let mut x = m.clone();
    let mut p = SymMatrix::zeros(n);
    let mut q = SymMatrix::zeros(n);
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let xp = SymMatrix::from_upper_fn(n, |i, j| x.get(i, j) + p.get(i, j));
        let y = project_psd(&xp)?;
        p = SymMatrix::from_upper_fn(n, |i, j| xp.get(i, j) - y.get(i, j));
        let yq = SymMatrix::from_upper_fn(n, |i, j| y.get(i, j) + q.get(i, j));
        let next = project_entrywise(&yq, ferro);
        q = SymMatrix::from_upper_fn(n, |i, j| yq.get(i, j) - next.get(i, j));
        let gap = next.max_abs_diff(&y);
        let moved = next.max_abs_diff(&x);
        x = next;
        if gap <= tol && moved <= tol {
            break;
        }
    }
    let out = polish(&x, ferro)?;
    let r = residuals(&out)?;
    if !r.passes(ferro, tol) {
        return Err(Error::ProjectionStalled {
            iterations,
            residuals: r.to_string(),
        });
    }
    Ok(out)
}

/// Dykstra's alternating projections onto the feasible set, followed by a
/// final feasibility polish.
pub fn project_feasible(m: &SymMatrix, ferro: bool) -> Result<SymMatrix> {
    let config = SolverConfig::default();
    project_feasible_with(
        m,
        ferro,
        config.dykstra_iterations,
        config.feasibility_tolerance,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMomentSolution {
    pub m: SymMatrix,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub ferro: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionRecord {
    n: usize,
    objective: f64,
    converged: bool,
    ferro: bool,
    iterations: usize,
    residuals: Residuals,
    #[serde(rename = "M")]
    m: Vec<f64>,
}

impl PseudoMomentSolution {
    /// Single-line JSON with `M` as a dense row-major array.
    pub fn to_json(&self) -> String {
        let record = SolutionRecord {
            n: self.m.n(),
            objective: self.objective,
            converged: self.converged,
            ferro: self.ferro,
            iterations: self.iterations,
            residuals: self.residuals,
            m: self.m.to_row_major(),
        };
        serde_json::to_string(&record).expect("solution records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: SolutionRecord = serde_json::from_str(text)?;
        if record.n > crate::model::MAX_SPINS {
            return Err(Error::field("n", "too large"));
        }
        let m = SymMatrix::from_row_major(record.n, &record.m)
            .map_err(|e| Error::field("M", e.to_string()))?;
        Ok(PseudoMomentSolution {
            m,
            objective: record.objective,
            residuals: record.residuals,
            iterations: record.iterations,
            converged: record.converged,
            ferro: record.ferro,
        })
    }
}

/// Maximizes the relaxation objective by projected gradient ascent.
///
/// Starts at `M = I`; each step moves along the objective gradient and
/// projects back with [`project_feasible`]. The best feasible iterate is
/// returned. `converged` is set once the relative objective change stays
/// below `objective_tolerance` for [`STALL_WINDOW`] consecutive iterations
/// with feasible residuals.
pub fn solve_relaxation(
    instance: &IsingInstance,
    config: &SolverConfig,
) -> Result<PseudoMomentSolution> {
    config.validate()?;
    if config.ferro {
        if let Some(c) = instance.couplings().iter().find(|c| c.value <= 0.0) {
            return Err(Error::NonFerromagnetic {
                i: c.i,
                j: c.j,
                value: c.value,
            });
        }
    }
    let n = instance.n();
    let tol = config.feasibility_tolerance;
    let mut m = SymMatrix::identity(n);
    let mut objective = relax_objective(instance, &m)?;

    let norm = instance.coupling_norm();
    if norm == 0.0 {
        return Ok(PseudoMomentSolution {
            residuals: residuals(&m)?,
            m,
            objective,
            iterations: 0,
            converged: true,
            ferro: config.ferro,
        });
    }

    let gradient_weight = match instance.kind() {
        FunctionalKind::PairProduct => 1.0,
        FunctionalKind::SquaredDifference => -2.0,
    };
    let mut gradient = SymMatrix::zeros(n);
    for c in instance.couplings() {
        gradient.set(c.i, c.j, gradient_weight * c.value);
    }
    let step = config.step_size.unwrap_or(1.0 / norm);

    let mut best = (m.clone(), objective);
    let mut stall = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let ascended = SymMatrix::from_upper_fn(n, |i, j| m.get(i, j) + step * gradient.get(i, j));
        m = match project_feasible_with(&ascended, config.ferro, config.dykstra_iterations, tol) {
            Ok(next) => next,
            // keep going from the polished point; the best-iterate record only
            // ever holds matrices that passed the feasibility check
            Err(Error::ProjectionStalled { .. }) => polish(&ascended, config.ferro)?,
            Err(e) => return Err(e),
        };
        let next = relax_objective(instance, &m)?;
        let change = (next - objective).abs() / objective.abs().max(1.0);
        objective = next;
        if next > best.1 && residuals(&m)?.passes(config.ferro, tol) {
            best = (m.clone(), next);
        }
        stall = if change < config.objective_tolerance {
            stall + 1
        } else {
            0
        };
        if stall >= STALL_WINDOW {
            converged = true;
            break;
        }
    }

    let (m, objective) = best;
    let residuals = residuals(&m)?;
    Ok(PseudoMomentSolution {
        converged: converged && residuals.passes(config.ferro, tol),
        m,
        objective,
        residuals,
        iterations,
        ferro: config.ferro,
    })
}
