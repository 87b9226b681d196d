//! Numerical tolerances used across the crate.
//!
//! Every threshold that a validator or check compares against lives here, so
//! the accuracy contract of the library is visible in one place. Functions
//! that accept an optional tolerance fall back to these values.

/// Hermiticity residual allowed for state and kernel matrices.
pub const HERMITICITY: f64 = 1e-12;

/// Lower bound for eigenvalues of matrices that must be positive
/// semidefinite; anything in `[-EIG_FLOOR, 0)` is treated as a rounding
/// artifact.
pub const EIG_FLOOR: f64 = 1e-12;

/// Negative Gram-kernel eigenvalues above this magnitude are clamped to zero
/// when extracting vector representations; below it the kernel is rejected.
pub const GRAM_CLAMP: f64 = 1e-10;

/// Default tolerance for structural validation reports (unit diagonal,
/// block positivity, covariance residuals) when the caller supplies none.
pub const VALIDATION: f64 = 1e-10;

/// Relative residual `|A v - lambda v| <= EIGEN_RESIDUAL * |A|` required of
/// every eigenpair returned by the Hermitian eigensolver.
pub const EIGEN_RESIDUAL: f64 = 1e-9;

/// Normalization defect allowed for an observable evaluated on the full
/// circle, `|E([0, 2*pi)) - I|`.
pub const NORMALIZATION: f64 = 1e-13;

/// Shift-covariance residual allowed on exact-arithmetic identities.
pub const COVARIANCE: f64 = 1e-12;

/// Mass lost to truncation when a coherent amplitude is cut at the scan
/// cutoff rule; larger tails abort the scan.
pub const COHERENT_TAIL: f64 = 1e-8;

/// Default per-mode cutoff budget for amplitude scans.
pub const CUTOFF_BUDGET: usize = 256;
