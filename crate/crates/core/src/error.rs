//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A state or operator does not fit in the requested truncated basis.
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    /// A state specification carries parameters outside its validity range.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Bogoliubov parameters must satisfy |u|^2 - |v|^2 = 1.
    #[error("invalid Gaussian parameters: {0}")]
    InvalidGaussianParams(String),

    /// Two output coordinates of an ideal comb scheme coincide.
    #[error("coordinate collision: {0}")]
    CoordinateCollision(String),

    /// Two support labels of the high-Fock limit model coincide.
    #[error("label collision: {0}")]
    LabelCollision(String),

    /// A matrix required to be positive semidefinite is not, beyond tolerance.
    #[error("matrix not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error(
        "solver did not converge after {iterations} iterations \
         (primal residual {primal:.3e}, dual residual {dual:.3e})"
    )]
    NonConvergence {
        primal: f64,
        dual: f64,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
