use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("self-loop at spin {0}")]
    SelfLoop(usize),

    #[error("duplicate coupling between spins {0} and {1}")]
    DuplicatePair(usize, usize),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error(
        "eigendecomposition did not converge after {iterations} sweeps \
         (n = {n}, max |a_ij| = {max_abs:e}, frobenius = {frobenius:e})"
    )]
    EigenNotConverged {
        iterations: usize,
        n: usize,
        max_abs: f64,
        frobenius: f64,
    },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("diagonal entry {index} is {value}, expected 1")]
    NonUnitDiagonal { index: usize, value: f64 },

    #[error("factorization failed: reconstruction error {error:e} after jitter")]
    Factorization { error: f64 },

    #[error("projection did not reach feasibility after {iterations} iterations: {residuals}")]
    ProjectionStalled {
        iterations: usize,
        residuals: String,
    },

    #[error("ferromagnetic mode requires positive couplings; J[{i}][{j}] = {value}")]
    NonFerromagnetic { i: usize, j: usize, value: f64 },

    #[error("enumeration over 2^{n} states exceeds the limit of 2^{limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("beta = {beta} is below the entropy bound hypothesis beta >= 3^(-1/2)")]
    BetaBelowHypothesis { beta: f64 },

    #[error("inconsistent report inputs: {0}")]
    InconsistentReport(String),

    #[error("no samples supplied")]
    EmptySamples,
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn field(field: &str, msg: impl Into<String>) -> Self {
        Error::Field {
            field: field.to_string(),
            message: msg.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
