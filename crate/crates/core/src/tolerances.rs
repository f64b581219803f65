//! Numerical tolerances shared by every module.
//!
//! Defaults live in [`Tolerances::DEFAULT`]; code that needs a threshold
//! reads it from there instead of hard-coding a literal.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigen reconstruction `‖VΛVᵀ − A‖_max`, relative to `max(1, ‖A‖_max)`.
    pub eigen_reconstruction: f64,
    /// Eigenvalues above `-psd_clip` count as nonnegative after projection.
    pub psd_clip: f64,
    /// Inner products of Gram factors against the factored matrix.
    pub gram: f64,
    /// Gram factorization refuses matrices with a more negative eigenvalue.
    pub gram_indefinite: f64,
    /// Added to the diagonal when a sampling factor fails to reconstruct.
    pub sampling_jitter: f64,
    /// Unit diagonal and PSD checks on user supplied correlation matrices.
    pub correlation_validation: f64,
    /// Pseudo-moment feasibility residuals.
    pub feasibility: f64,
    /// Probability tables must sum to one within this.
    pub table_normalization: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        eigen_reconstruction: 1e-8,
        psd_clip: 1e-10,
        gram: 1e-8,
        gram_indefinite: 1e-6,
        sampling_jitter: 1e-10,
        correlation_validation: 1e-8,
        feasibility: 1e-8,
        table_normalization: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
