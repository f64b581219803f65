//! Pseudo-moment relaxations for Ising log-partition functions, together with
//! the rounding schemes that certify them and brute-force oracles to check
//! everything at desk scale.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: Ising instances, random ensembles, the text instance format.
//! * [`linalg`]: symmetric matrices, eigendecomposition, PSD projection,
//!   Gram factors and correlated Gaussian sampling.
//! * [`relax`]: the degree-2 pseudo-moment relaxation and its ferromagnetic
//!   strengthening, solved by projected gradient ascent.
//! * [`dichotomized`]: sign-of-smoothed-Gaussian sampler with its arcsine
//!   moment law and entropy floor.
//! * [`rounding`]: uniform, dichotomized-Gaussian and scaled quadratic form
//!   roundings of a pseudo-moment matrix.
//! * [`oracle`]: exhaustive enumeration over `{-1, 1}^n`.
//! * [`estimate`]: Monte Carlo estimators and approximation reports.
//!
//! Entropies are reported in nats throughout.

pub mod dichotomized;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod relax;
pub mod rounding;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use model::{FunctionalKind, IsingInstance, SpinVector};
