//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes surfaced by constructors, validators and scans.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian (max |A - A*| = {residual:.3e})")]
    NonHermitianInput { residual: f64 },

    /// A Gram-family vector fails the unit-norm requirement.
    #[error("vector for label ({n}, {k}) is not unit norm (norm = {norm})")]
    NonUnitVector { n: usize, k: usize, norm: f64 },

    /// An operation needs a larger matrix or cutoff than supplied.
    #[error("dimension {dim} too small: {context} needs at least {needed}")]
    DimensionTooSmall {
        dim: usize,
        needed: usize,
        context: &'static str,
    },

    /// A labelled family is missing the vector for one of its labels.
    #[error("no vector supplied for label ({n}, {k})")]
    MissingLabel { n: usize, k: usize },

    /// A structural validation (positivity, unit diagonal, ...) failed.
    #[error("validation failed: {0}")]
    ValidationFailed(String),

    /// Two objects that must live on the same truncation do not.
    #[error("cutoff mismatch: {0}")]
    CutoffMismatch(String),

    /// A claimed first-moment operator does not have the required shape.
    #[error("malformed first-moment operator: {0}")]
    MalformedMoment(String),

    /// A square-summable coefficient sequence fails the unit-norm requirement.
    #[error("coefficient sequence is not unit norm (sum |c|^2 = {norm_sqr})")]
    NonUnitNorm { norm_sqr: f64 },

    /// Truncating a coherent state at the requested cutoff loses too much mass.
    #[error("coherent tail {tail:.3e} exceeds {limit:.3e} at amplitude {amplitude}")]
    TailTooLarge {
        amplitude: f64,
        tail: f64,
        limit: f64,
    },

    /// An amplitude scan would need a cutoff above the configured budget.
    #[error("required per-mode cutoff {required} exceeds budget {budget}")]
    CutoffOverBudget { required: usize, budget: usize },

    /// An arc endpoint pair is not an admissible half-open interval.
    #[error("invalid interval [{a}, {b}): need 0 <= a < b <= 2*pi")]
    InvalidInterval { a: f64, b: f64 },

    /// Two arcs in an interval set overlap on a set of positive measure.
    #[error("intervals overlap near theta = {at}")]
    OverlappingIntervals { at: f64 },

    /// The iterative eigensolver failed to converge or left a large residual.
    #[error("eigensolver failure: {0}")]
    EigenFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
