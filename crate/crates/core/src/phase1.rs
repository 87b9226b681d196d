//! Single-mode phase observables.
//!
//! A phase observable is parametrized by a Hermitian, unit-diagonal,
//! positive semidefinite kernel `c[n, m]`; the operator attached to an arc
//! set `X` has entries `c[n, m] * nu(n - m, X)` where `nu(q, X)` is the
//! `q`-th Fourier coefficient of the normalized indicator of `X`. Measurable
//! sets are restricted to finite unions of half-open subintervals of
//! `[0, 2*pi)`, for which the Fourier weights have closed forms and shifts
//! are exact; nothing in the validated statements needs more general sets.

use std::f64::consts::TAU;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fock::{hermitian_eigenvalues_of, hermiticity_residual, C64, CMatrix, CVector};
use crate::tolerance;

/// Finite disjoint union of half-open arcs `[a, b)` inside `[0, 2*pi)`.
///
/// Stored sorted by left endpoint with touching arcs merged, so equality of
/// the represented sets is equality of the representation.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Builds a set from raw arcs, sorting, merging touching arcs and
    /// rejecting genuine overlaps.
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        for &(a, b) in intervals {
            if !(a.is_finite() && b.is_finite()) || a < 0.0 || b <= a || b > TAU {
                return Err(Error::InvalidInterval { a, b });
            }
        }
        Self::normalize(intervals.to_vec())
    }

    fn normalize(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        // Endpoints within MERGE_EPS are treated as touching: shifting an
        // arc across the wrap point splits it, and a later shift back must
        // rejoin the halves even though the seam re-enters a rounding error
        // apart.
        const MERGE_EPS: f64 = 1e-12;
        intervals.sort_by(|x, y| x.partial_cmp(y).expect("finite endpoints"));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a < last.1 - MERGE_EPS => {
                    return Err(Error::OverlappingIntervals { at: a });
                }
                Some(last) if a <= last.1 + MERGE_EPS => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    /// The full circle `[0, 2*pi)`.
    pub fn full_circle() -> Self {
        Self {
            intervals: vec![(0.0, TAU)],
        }
    }

    /// The empty set.
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// Arc of given width centered at `center`, wrapped into `[0, 2*pi)`.
    pub fn centered(center: f64, width: f64) -> Self {
        assert!(width > 0.0, "window width must be positive");
        if width >= TAU {
            return Self::full_circle();
        }
        Self {
            intervals: vec![(0.0, width)],
        }
        .shift(center - width / 2.0)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Translation mod `2*pi`, splitting any arc that crosses the wrap point.
    pub fn shift(&self, t: f64) -> Self {
        let r = t.rem_euclid(TAU);
        if r == 0.0 {
            return self.clone();
        }
        let mut shifted = Vec::with_capacity(self.intervals.len() + 1);
        for &(a, b) in &self.intervals {
            let (a2, b2) = (a + r, b + r);
            if b2 <= TAU {
                shifted.push((a2, b2));
            } else if a2 >= TAU {
                shifted.push((a2 - TAU, b2 - TAU));
            } else {
                shifted.push((a2, TAU));
                if b2 - TAU > 0.0 {
                    shifted.push((0.0, b2 - TAU));
                }
            }
        }
        Self::normalize(shifted).expect("shift of a disjoint set stays disjoint")
    }

    /// Disjoint union; overlapping operands are an error.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::normalize(all)
    }

    /// Whether `theta` (taken mod `2*pi`) lies in the set.
    pub fn contains(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(TAU);
        self.intervals.iter().any(|&(a, b)| a <= t && t < b)
    }
}

/// `(1/2*pi) * integral of e^{i q theta} over X`, in closed form per arc.
pub fn fourier_weight(q: i64, x: &IntervalSet) -> C64 {
    if q == 0 {
        return C64::new(x.total_length() / TAU, 0.0);
    }
    let qf = q as f64;
    let mut sum = C64::new(0.0, 0.0);
    for &(a, b) in x.intervals() {
        sum += C64::from_polar(1.0, qf * b) - C64::from_polar(1.0, qf * a);
    }
    sum / C64::new(0.0, TAU * qf)
}

/// Hermitian, unit-diagonal, positive semidefinite matrix `c[n, m]`
/// parametrizing a single-mode phase observable as a Gram matrix
/// `<phi_n | phi_m>` of unit vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseKernel {
    entries: CMatrix,
}

impl PhaseKernel {
    /// All-ones kernel on occupations `0..=n_max`: every inner product is 1.
    pub fn canonical(n_max: usize) -> Self {
        let dim = n_max + 1;
        Self {
            entries: CMatrix::from_element(dim, dim, C64::new(1.0, 0.0)),
        }
    }

    /// Kernel of the phase-space observable generated by the vacuum:
    /// `c[n, m] = Gamma((n+m)/2 + 1) / sqrt(n! m!)`, via log-gamma.
    pub fn coherent_vacuum(n_max: usize) -> Self {
        let dim = n_max + 1;
        let mut entries = CMatrix::zeros(dim, dim);
        for n in 0..dim {
            for m in 0..dim {
                let ln = ln_gamma((n + m) as f64 / 2.0 + 1.0)
                    - 0.5 * (ln_gamma(n as f64 + 1.0) + ln_gamma(m as f64 + 1.0));
                entries[(n, m)] = C64::new(ln.exp(), 0.0);
            }
        }
        Self { entries }
    }

    /// Gram matrix of the supplied unit vectors.
    pub fn from_vectors(phis: &[CVector]) -> Result<Self> {
        let dim = phis.len();
        for (n, phi) in phis.iter().enumerate() {
            let norm = phi.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NonUnitVector { n, k: 0, norm });
            }
        }
        let mut entries = CMatrix::zeros(dim, dim);
        for n in 0..dim {
            for m in 0..dim {
                entries[(n, m)] = phis[n].dotc(&phis[m]);
            }
        }
        Ok(Self { entries })
    }

    /// Accepts an explicit matrix after validating the kernel invariants.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        let kernel = Self { entries };
        kernel.validate(None)?;
        Ok(kernel)
    }

    /// As [`PhaseKernel::from_matrix`] with a caller-chosen tolerance.
    pub fn from_matrix_with_tol(entries: CMatrix, tol: f64) -> Result<Self> {
        let kernel = Self { entries };
        kernel.validate(Some(tol))?;
        Ok(kernel)
    }

    /// Checks Hermiticity, unit diagonal, entry bound and positivity.
    pub fn validate(&self, tol: Option<f64>) -> Result<()> {
        let tol = tol.unwrap_or(tolerance::VALIDATION);
        let m = &self.entries;
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ValidationFailed(format!(
                "kernel must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = hermiticity_residual(m);
        if herm > tol {
            return Err(Error::NonHermitianInput { residual: herm });
        }
        for n in 0..m.nrows() {
            if (m[(n, n)] - C64::new(1.0, 0.0)).norm() > tol {
                return Err(Error::ValidationFailed(format!(
                    "diagonal entry ({n},{n}) = {} differs from 1",
                    m[(n, n)]
                )));
            }
            for k in 0..m.ncols() {
                if m[(n, k)].norm() > 1.0 + tol {
                    return Err(Error::ValidationFailed(format!(
                        "entry ({n},{k}) has modulus {} > 1",
                        m[(n, k)].norm()
                    )));
                }
            }
        }
        let eigs = hermitian_eigenvalues_of(m)?;
        let min_eig = eigs.first().copied().unwrap_or(0.0);
        if min_eig < -tol.max(tolerance::GRAM_CLAMP) {
            return Err(Error::ValidationFailed(format!(
                "kernel has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn entry(&self, n: usize, m: usize) -> C64 {
        self.entries[(n, m)]
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// Classical reference phase in `[0, 2*pi)`; the degenerate "observable"
/// whose statistics are a point mass at the stored angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPhase {
    alpha: f64,
}

impl FixedPhase {
    /// Wraps any finite angle into `[0, 2*pi)`.
    pub fn new(alpha: f64) -> Self {
        assert!(alpha.is_finite(), "phase must be finite");
        let mut a = alpha.rem_euclid(TAU);
        if a == TAU {
            a = 0.0;
        }
        Self { alpha: a }
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }
}

/// Single-mode observable value `E(X)`: entry `(n, m)` is
/// `c[n, m] * fourier_weight(n - m, X)`.
pub fn eval_phase(kernel: &PhaseKernel, x: &IntervalSet) -> CMatrix {
    let dim = kernel.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        for m in 0..dim {
            out[(n, m)] = kernel.entry(n, m) * fourier_weight(n as i64 - m as i64, x);
        }
    }
    out
}

/// Continuous probability density of the phase distribution in state `t`:
/// `g(theta) = sum c[n, m] e^{i(n-m)theta} t[m, n]`.
pub fn phase_density(kernel: &PhaseKernel, t: &CMatrix, theta: f64) -> Result<f64> {
    let dim = kernel.dim();
    if t.nrows() != dim || t.ncols() != dim {
        return Err(Error::CutoffMismatch(format!(
            "state is {}x{}, kernel dimension is {dim}",
            t.nrows(),
            t.ncols()
        )));
    }
    let herm = hermiticity_residual(t);
    if herm > tolerance::VALIDATION {
        return Err(Error::NonHermitianInput { residual: herm });
    }
    let mut g = C64::new(0.0, 0.0);
    for n in 0..dim {
        for m in 0..dim {
            let phase = C64::from_polar(1.0, (n as f64 - m as f64) * theta);
            g += kernel.entry(n, m) * phase * t[(m, n)];
        }
    }
    if g.im.abs() > 1e-10 {
        return Err(Error::ValidationFailed(format!(
            "density has imaginary residual {:.3e}",
            g.im
        )));
    }
    Ok(g.re)
}
