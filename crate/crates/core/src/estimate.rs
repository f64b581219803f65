//! Monte Carlo estimators and approximation reports.

use std::collections::HashMap;

use serde::Serialize;

use crate::linalg::SymMatrix;
use crate::relax::PseudoMomentSolution;
use crate::rounding::GibbsObjectiveEstimate;
use crate::{Error, IsingInstance, Result};

#[derive(Debug, Clone)]
pub struct EmpiricalMoments {
    pub moments: SymMatrix,
    /// `√((1 − m̂²)/N)` entrywise.
    pub standard_errors: SymMatrix,
    pub count: usize,
}

/// Entrywise sample means of `x_i x_j` over a stream of spin vectors.
pub fn empirical_moments<I, S>(samples: I) -> Result<EmpiricalMoments>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[i8]>,
{
    let mut iter = samples.into_iter();
    let first = iter.next().ok_or(Error::EmptySamples)?;
    let n = first.as_ref().len();
    let mut sums = vec![0i64; n * n];
    let mut count = 0usize;
    let mut add = |x: &[i8]| -> Result<()> {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                sums[i * n + j] += i64::from(x[i] * x[j]);
            }
        }
        count += 1;
        Ok(())
    };
    add(first.as_ref())?;
    for x in iter {
        add(x.as_ref())?;
    }
    if count < 2 {
        return Err(Error::param("empirical moments need at least two samples"));
    }
    let nf = count as f64;
    let moments = SymMatrix::from_upper_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            sums[i * n + j] as f64 / nf
        }
    });
    let standard_errors = SymMatrix::from_upper_fn(n, |i, j| {
        let m = moments.get(i, j);
        ((1.0 - m * m).max(0.0) / nf).sqrt()
    });
    Ok(EmpiricalMoments {
        moments,
        standard_errors,
        count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginEntropy {
    /// `−Σ p̂ ln p̂` over the observed support. Biased low.
    pub nats: f64,
    pub support_size: usize,
    pub count: usize,
}

/// Plug-in (empirical frequency) entropy estimate in nats.
///
/// No bias correction: the estimate is below the true entropy in
/// expectation, which keeps `estimate ≥ bound` checks conservative.
pub fn plugin_entropy<I, S>(samples: I) -> Result<PluginEntropy>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[i8]>,
{
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut n = None;
    let mut total = 0usize;
    for x in samples {
        let x = x.as_ref();
        match n {
            None => {
                if x.len() > 64 {
                    return Err(Error::param("plug-in entropy supports at most 64 spins"));
                }
                n = Some(x.len());
            }
            Some(n) if n != x.len() => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: x.len(),
                })
            }
            _ => {}
        }
        let key = x
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &v)| if v > 0 { acc | 1 << i } else { acc });
        *counts.entry(key).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptySamples);
    }
    let nf = total as f64;
    // sort so the floating-point sum does not depend on hash order
    let mut freq: Vec<u64> = counts.values().copied().collect();
    freq.sort_unstable();
    let nats = -freq
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            p * p.ln()
        })
        .sum::<f64>();
    Ok(PluginEntropy {
        nats: nats.max(0.0),
        support_size: freq.len(),
        count: total,
    })
}

/// One row of an approximation benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximationReport {
    pub instance_id: String,
    pub n: usize,
    pub rounding: String,
    pub relaxation_objective: f64,
    pub rounded_objective: f64,
    pub energy: f64,
    pub energy_ci: (f64, f64),
    pub entropy_floor: f64,
    pub exact_log_z: Option<f64>,
    pub rounded_over_relax: f64,
    pub exact_over_relax: Option<f64>,
    pub relax_converged: bool,
    pub sample_count: usize,
    pub seed: u64,
}

/// Slack allowed when checking `rounded ≤ log Z` (MC-free parts are exact).
pub const ROUNDED_VS_EXACT_SLACK: f64 = 1e-6;
/// Slack allowed when checking `log Z ≤ relaxation` (solver tolerance).
pub const EXACT_VS_RELAX_SLACK: f64 = 1e-4;

pub const CSV_HEADER: &str = "instance_id,n,rounding,relaxation_objective,rounded_objective,\
energy,energy_ci_low,energy_ci_high,entropy_floor,exact_log_z,rounded_over_relax,exact_over_relax,\
relax_converged,sample_count,seed";

impl ApproximationReport {
    /// Ratios agree with the stored objectives.
    pub fn is_consistent(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        let r = close(
            self.rounded_over_relax,
            self.rounded_objective / self.relaxation_objective,
        );
        let e = match (self.exact_log_z, self.exact_over_relax) {
            (Some(z), Some(ratio)) => close(ratio, z / self.relaxation_objective),
            (None, None) => true,
            _ => false,
        };
        r && e
    }

    /// `rounded ≤ log Z + 1e-6 ≤ relaxation + 1e-4`; `None` without `log Z`.
    pub fn sandwich_holds(&self) -> Option<bool> {
        self.exact_log_z.map(|z| {
            self.rounded_objective <= z + ROUNDED_VS_EXACT_SLACK
                && z <= self.relaxation_objective + EXACT_VS_RELAX_SLACK
        })
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance_id,
            self.n,
            self.rounding,
            self.relaxation_objective,
            self.rounded_objective,
            self.energy,
            self.energy_ci.0,
            self.energy_ci.1,
            self.entropy_floor,
            opt(self.exact_log_z),
            self.rounded_over_relax,
            opt(self.exact_over_relax),
            self.relax_converged,
            self.sample_count,
            self.seed
        )
    }
}

/// Assembles a report and refuses inputs that contradict soundness of the
/// relaxation (a rounded objective above the relaxation value).
pub fn build_report(
    instance_id: &str,
    instance: &IsingInstance,
    solution: &PseudoMomentSolution,
    rounding: &str,
    rounded: &GibbsObjectiveEstimate,
    exact_log_z: Option<f64>,
    seed: u64,
) -> Result<ApproximationReport> {
    let n = instance.n();
    if solution.m.n() != n {
        return Err(Error::InconsistentReport(format!(
            "solution has n = {}, instance has n = {n}",
            solution.m.n()
        )));
    }
    let relax = solution.objective;
    if !(relax > 0.0 && relax.is_finite()) {
        return Err(Error::InconsistentReport(format!(
            "relaxation objective {relax} is not positive"
        )));
    }
    if rounded.objective > relax + 1e-9 * relax.max(1.0) {
        return Err(Error::InconsistentReport(format!(
            "rounded objective {} exceeds the relaxation objective {relax}",
            rounded.objective
        )));
    }
    let report = ApproximationReport {
        instance_id: instance_id.to_string(),
        n,
        rounding: rounding.to_string(),
        relaxation_objective: relax,
        rounded_objective: rounded.objective,
        energy: rounded.energy,
        energy_ci: rounded.ci,
        entropy_floor: rounded.entropy_floor,
        exact_log_z,
        rounded_over_relax: rounded.objective / relax,
        exact_over_relax: exact_log_z.map(|z| z / relax),
        relax_converged: solution.converged,
        sample_count: rounded.samples,
        seed,
    };
    debug_assert!(report.is_consistent());
    Ok(report)
}
