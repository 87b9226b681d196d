//! Truncated two-mode Fock-space arithmetic: cutoffs, basis labelling,
//! coherent vectors, states, operators, and number-shift unitaries.
//!
//! Two truncation schemes coexist. `PerMode(N)` bounds each mode's
//! occupation separately and suits state preparation; `Total(S)` bounds the
//! total occupation `n + k` and suits operator algebra, because
//! phase-difference observables are block diagonal over the total number, so
//! their compressions to a `Total` space are exact rather than approximate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::tolerance;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix in the fixed basis ordering of a [`Cutoff`].
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;

/// Truncation scheme for the two-mode number basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    /// Keep labels `(n, k)` with `n <= N` and `k <= N`; dimension `(N+1)^2`.
    PerMode(usize),
    /// Keep labels `(n, k)` with `n + k <= S`; dimension `(S+1)(S+2)/2`.
    Total(usize),
}

impl Cutoff {
    /// Number of retained basis labels.
    pub fn dim(self) -> usize {
        match self {
            Cutoff::PerMode(n) => (n + 1) * (n + 1),
            Cutoff::Total(s) => (s + 1) * (s + 2) / 2,
        }
    }

    /// Largest total occupation `n + k` present in the space.
    pub fn max_total(self) -> usize {
        match self {
            Cutoff::PerMode(n) => 2 * n,
            Cutoff::Total(s) => s,
        }
    }

    /// Largest single-mode occupation present in the space.
    pub fn max_per_mode(self) -> usize {
        match self {
            Cutoff::PerMode(n) => n,
            Cutoff::Total(s) => s,
        }
    }

    /// Whether the label `(n, k)` lies inside the truncation.
    pub fn contains(self, n: usize, k: usize) -> bool {
        match self {
            Cutoff::PerMode(nmax) => n <= nmax && k <= nmax,
            Cutoff::Total(s) => n + k <= s,
        }
    }

    /// Basis position of `(n, k)`, or `None` when outside the truncation.
    ///
    /// `PerMode` labels are row-major in `(n, k)`. `Total` labels are sorted
    /// by sector `s = n + k` ascending and by `n` ascending within a sector;
    /// the fixed ordering makes every matrix in the crate reproducible bit
    /// for bit.
    pub fn index_of(self, n: usize, k: usize) -> Option<usize> {
        if !self.contains(n, k) {
            return None;
        }
        Some(match self {
            Cutoff::PerMode(nmax) => n * (nmax + 1) + k,
            Cutoff::Total(_) => {
                let s = n + k;
                s * (s + 1) / 2 + n
            }
        })
    }

    /// Label at basis position `idx`. Panics if out of range.
    pub fn label_at(self, idx: usize) -> (usize, usize) {
        assert!(idx < self.dim(), "basis index {idx} out of range");
        match self {
            Cutoff::PerMode(nmax) => (idx / (nmax + 1), idx % (nmax + 1)),
            Cutoff::Total(_) => {
                // Invert the triangular offset s(s+1)/2 <= idx.
                let mut s = 0usize;
                while (s + 1) * (s + 2) / 2 <= idx {
                    s += 1;
                }
                let n = idx - s * (s + 1) / 2;
                (n, s - n)
            }
        }
    }

    /// All labels in basis order.
    pub fn labels(self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        match self {
            Cutoff::PerMode(nmax) => {
                for n in 0..=nmax {
                    for k in 0..=nmax {
                        out.push((n, k));
                    }
                }
            }
            Cutoff::Total(s) => {
                for sec in 0..=s {
                    for n in 0..=sec {
                        out.push((n, sec - n));
                    }
                }
            }
        }
        out
    }
}

/// Single-mode coefficient vector with the truncated probability mass kept
/// on the side, so normalized constructions satisfy
/// `sum |c_n|^2 + tail_mass = 1`.
#[derive(Clone, Debug)]
pub struct FockVector {
    pub coefficients: Vec<C64>,
    pub tail_mass: f64,
}

impl FockVector {
    /// Truncated coherent vector `e^{-|z|^2/2} z^n / sqrt(n!)`, `n <= n_max`.
    ///
    /// Coefficients are evaluated in log domain so the factorials never
    /// overflow (safe far beyond `|z| <= 8`, `n_max <= 400`).
    pub fn coherent(z: C64, n_max: usize) -> Self {
        let r2 = z.norm_sqr();
        if r2 == 0.0 {
            let mut coefficients = vec![C64::new(0.0, 0.0); n_max + 1];
            coefficients[0] = C64::new(1.0, 0.0);
            return Self {
                coefficients,
                tail_mass: 0.0,
            };
        }
        let ln_r = z.norm().ln();
        let arg = z.arg();
        let mut coefficients = Vec::with_capacity(n_max + 1);
        let mut norm_sqr = 0.0;
        for n in 0..=n_max {
            let ln_mag = -0.5 * r2 + (n as f64) * ln_r - 0.5 * ln_gamma(n as f64 + 1.0);
            let mag = ln_mag.exp();
            let phase = (n as f64) * arg;
            coefficients.push(C64::from_polar(mag, phase));
            norm_sqr += mag * mag;
        }
        Self {
            coefficients,
            tail_mass: (1.0 - norm_sqr).max(0.0),
        }
    }

    /// Number-state vector `|n>` on `0..=n_max`.
    pub fn number(n: usize, n_max: usize) -> Self {
        assert!(n <= n_max, "occupation {n} above cutoff {n_max}");
        let mut coefficients = vec![C64::new(0.0, 0.0); n_max + 1];
        coefficients[n] = C64::new(1.0, 0.0);
        Self {
            coefficients,
            tail_mass: 0.0,
        }
    }

    /// Arbitrary coefficients, assumed to carry no truncated mass.
    pub fn from_coefficients(coefficients: Vec<C64>) -> Self {
        Self {
            coefficients,
            tail_mass: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Two-mode coefficient vector on a cutoff basis.
#[derive(Clone, Debug)]
pub struct TwoModeVector {
    cutoff: Cutoff,
    coeffs: CVector,
}

impl TwoModeVector {
    /// Product vector with coefficients `a_n * b_k` on the retained labels.
    pub fn product(a: &FockVector, b: &FockVector, cutoff: Cutoff) -> Self {
        let mut coeffs = CVector::zeros(cutoff.dim());
        for (idx, (n, k)) in cutoff.labels().into_iter().enumerate() {
            if n < a.dim() && k < b.dim() {
                coeffs[idx] = a.coefficients[n] * b.coefficients[k];
            }
        }
        Self { cutoff, coeffs }
    }

    /// Basis vector `|n, k>`.
    pub fn basis(n: usize, k: usize, cutoff: Cutoff) -> Result<Self> {
        let idx = cutoff
            .index_of(n, k)
            .ok_or(Error::CutoffMismatch(format!(
                "label ({n}, {k}) outside cutoff {cutoff:?}"
            )))?;
        let mut coeffs = CVector::zeros(cutoff.dim());
        coeffs[idx] = C64::new(1.0, 0.0);
        Ok(Self { cutoff, coeffs })
    }

    /// Truncated two-mode coherent vector `|z1> (x) |z2>`.
    pub fn coherent(z1: C64, z2: C64, cutoff: Cutoff) -> Self {
        let n_max = cutoff.max_per_mode();
        Self::product(
            &FockVector::coherent(z1, n_max),
            &FockVector::coherent(z2, n_max),
            cutoff,
        )
    }

    /// Raw coefficient vector from caller-supplied data.
    pub fn from_coeffs(cutoff: Cutoff, coeffs: CVector) -> Result<Self> {
        if coeffs.len() != cutoff.dim() {
            return Err(Error::CutoffMismatch(format!(
                "coefficient length {} does not match cutoff dimension {}",
                coeffs.len(),
                cutoff.dim()
            )));
        }
        Ok(Self { cutoff, coeffs })
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    /// Coefficient at label `(n, k)`, zero outside the cutoff.
    pub fn coeff(&self, n: usize, k: usize) -> C64 {
        match self.cutoff.index_of(n, k) {
            Some(idx) => self.coeffs[idx],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Positive unit-trace-or-less matrix on a cutoff basis.
///
/// The trace may fall short of one when the state is a truncation of an
/// infinite-dimensional state (coherent states); it must stay positive.
#[derive(Clone, Debug)]
pub struct TwoModeState {
    cutoff: Cutoff,
    matrix: CMatrix,
}

impl TwoModeState {
    /// Validates Hermiticity, positivity and trace before accepting.
    pub fn from_matrix(cutoff: Cutoff, matrix: CMatrix) -> Result<Self> {
        let dim = cutoff.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::CutoffMismatch(format!(
                "matrix is {}x{}, cutoff dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = hermiticity_residual(&matrix);
        if herm > tolerance::HERMITICITY {
            return Err(Error::NonHermitianInput { residual: herm });
        }
        let eigs = hermitian_eigenvalues_of(&matrix)?;
        let min_eig = eigs.first().copied().unwrap_or(0.0);
        if min_eig < -tolerance::EIG_FLOOR {
            return Err(Error::ValidationFailed(format!(
                "state has negative eigenvalue {min_eig:.3e}"
            )));
        }
        let state = Self { cutoff, matrix };
        state.check_trace()?;
        Ok(state)
    }

    /// Rank-one state `|v><v|`; positivity holds by construction.
    pub fn pure(v: &TwoModeVector) -> Result<Self> {
        let matrix = &v.coeffs * v.coeffs.adjoint();
        let state = Self {
            cutoff: v.cutoff,
            matrix,
        };
        state.check_trace()?;
        Ok(state)
    }

    /// Number state `|n, k><n, k|`.
    pub fn number(n: usize, k: usize, cutoff: Cutoff) -> Result<Self> {
        Self::pure(&TwoModeVector::basis(n, k, cutoff)?)
    }

    /// Truncated two-mode coherent state.
    pub fn coherent(z1: C64, z2: C64, cutoff: Cutoff) -> Self {
        Self::pure(&TwoModeVector::coherent(z1, z2, cutoff))
            .expect("truncated coherent state always has positive trace")
    }

    /// Product pure state from per-mode coefficient lists.
    pub fn product_pure(phi: &[C64], psi: &[C64], cutoff: Cutoff) -> Result<Self> {
        let a = FockVector::from_coefficients(phi.to_vec());
        let b = FockVector::from_coefficients(psi.to_vec());
        Self::pure(&TwoModeVector::product(&a, &b, cutoff))
    }

    fn check_trace(&self) -> Result<()> {
        let tr = self.trace();
        if tr <= 0.0 || tr > 1.0 + tolerance::HERMITICITY {
            return Err(Error::ValidationFailed(format!(
                "state trace {tr} outside (0, 1]"
            )));
        }
        Ok(())
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Matrix element `<n,k| T |m,l>`, zero outside the cutoff.
    pub fn entry(&self, (n, k): (usize, usize), (m, l): (usize, usize)) -> C64 {
        match (self.cutoff.index_of(n, k), self.cutoff.index_of(m, l)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => C64::new(0.0, 0.0),
        }
    }
}

/// Complex matrix on a cutoff basis, with an optional structural promise.
///
/// When `block_diagonal_in_sum` is set, every entry coupling labels with
/// different total occupation is exactly zero; constructors verify this.
#[derive(Clone, Debug)]
pub struct TwoModeOperator {
    cutoff: Cutoff,
    matrix: CMatrix,
    block_diagonal_in_sum: bool,
}

impl TwoModeOperator {
    pub fn new(cutoff: Cutoff, matrix: CMatrix, block_diagonal_in_sum: bool) -> Result<Self> {
        let dim = cutoff.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::CutoffMismatch(format!(
                "matrix is {}x{}, cutoff dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if block_diagonal_in_sum {
            let labels = cutoff.labels();
            for (i, &(n, k)) in labels.iter().enumerate() {
                for (j, &(m, l)) in labels.iter().enumerate() {
                    if n + k != m + l && matrix[(i, j)] != C64::new(0.0, 0.0) {
                        return Err(Error::ValidationFailed(format!(
                            "entry (({n},{k}),({m},{l})) breaks the promised block structure"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            cutoff,
            matrix,
            block_diagonal_in_sum,
        })
    }

    /// Constructor for callers that guarantee the block structure by the
    /// way they fill the matrix, skipping the quadratic verification pass.
    pub(crate) fn new_unchecked(
        cutoff: Cutoff,
        matrix: CMatrix,
        block_diagonal_in_sum: bool,
    ) -> Self {
        debug_assert_eq!(matrix.nrows(), cutoff.dim());
        debug_assert_eq!(matrix.ncols(), cutoff.dim());
        Self {
            cutoff,
            matrix,
            block_diagonal_in_sum,
        }
    }

    pub fn identity(cutoff: Cutoff) -> Self {
        Self {
            cutoff,
            matrix: CMatrix::identity(cutoff.dim(), cutoff.dim()),
            block_diagonal_in_sum: true,
        }
    }

    pub fn zero(cutoff: Cutoff) -> Self {
        Self {
            cutoff,
            matrix: CMatrix::zeros(cutoff.dim(), cutoff.dim()),
            block_diagonal_in_sum: true,
        }
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_block_diagonal_in_sum(&self) -> bool {
        self.block_diagonal_in_sum
    }

    pub fn adjoint(&self) -> Self {
        Self {
            cutoff: self.cutoff,
            matrix: self.matrix.adjoint(),
            block_diagonal_in_sum: self.block_diagonal_in_sum,
        }
    }

    /// Matrix element `<n,k| A |m,l>`, zero outside the cutoff.
    pub fn entry(&self, (n, k): (usize, usize), (m, l): (usize, usize)) -> C64 {
        match (self.cutoff.index_of(n, k), self.cutoff.index_of(m, l)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => C64::new(0.0, 0.0),
        }
    }
}

/// Number-shift unitary with entry `e^{i(alpha n + beta k)}` at label `(n, k)`.
pub fn theta_unitary(alpha: f64, beta: f64, cutoff: Cutoff) -> TwoModeOperator {
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (idx, (n, k)) in cutoff.labels().into_iter().enumerate() {
        let phase = alpha * n as f64 + beta * k as f64;
        matrix[(idx, idx)] = C64::from_polar(1.0, phase);
    }
    TwoModeOperator {
        cutoff,
        matrix,
        block_diagonal_in_sum: true,
    }
}

/// Orthogonal projection onto the total-occupation sector `n + k = s`.
///
/// Sectors above the cutoff give the zero operator.
pub fn number_sum_projection(s: usize, cutoff: Cutoff) -> TwoModeOperator {
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (idx, (n, k)) in cutoff.labels().into_iter().enumerate() {
        if n + k == s {
            matrix[(idx, idx)] = C64::new(1.0, 0.0);
        }
    }
    TwoModeOperator {
        cutoff,
        matrix,
        block_diagonal_in_sum: true,
    }
}

/// Orthogonal projection onto the occupation-difference sector `n - k = d`.
///
/// Sectors outside the cutoff give the zero operator.
pub fn number_diff_projection(d: i64, cutoff: Cutoff) -> TwoModeOperator {
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (idx, (n, k)) in cutoff.labels().into_iter().enumerate() {
        if n as i64 - k as i64 == d {
            matrix[(idx, idx)] = C64::new(1.0, 0.0);
        }
    }
    TwoModeOperator {
        cutoff,
        matrix,
        block_diagonal_in_sum: false,
    }
}

/// Max-modulus deviation of a square matrix from its own adjoint.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Ascending eigenvalues of a Hermitian operator.
///
/// Rejects inputs whose Hermiticity residual exceeds `1e-10` and verifies
/// every returned pair to `|A v - lambda v| <= 1e-9 |A|`.
pub fn hermitian_eigenvalues(op: &TwoModeOperator) -> Result<Vec<f64>> {
    let herm = hermiticity_residual(&op.matrix);
    if herm > 1e-10 {
        return Err(Error::NonHermitianInput { residual: herm });
    }
    hermitian_eigenvalues_of(&op.matrix)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues_of(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigendecomposition(m)?.0)
}

/// Ascending eigenvalues with matching eigenvector columns.
///
/// The matrix is Hermitized as `(m + m*)/2` before decomposition; callers
/// that need an input check do it first. Every eigenpair must satisfy
/// `|A v - lambda v| <= 1e-9 |A|_F`, otherwise the solver output is rejected.
pub fn hermitian_eigendecomposition(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::CutoffMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let herm = (m + m.adjoint()).scale(0.5);
    // Fast path first. The QR iteration can stall or silently produce junk
    // (including non-finite eigenvalues) on tightly clustered spectra, so
    // its output is verified and the unconditionally convergent Jacobi
    // sweep settles any matrix it rejects.
    if let Some(eigen) = SymmetricEigen::try_new(herm.clone(), f64::EPSILON, 100_000) {
        let values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
        if let Some(pair) = checked_eigenpairs(&herm, values, eigen.eigenvectors) {
            return Ok(pair);
        }
    }
    let (values, vectors) = jacobi_hermitian(&herm);
    checked_eigenpairs(&herm, values, vectors).ok_or_else(|| {
        Error::EigenFailure(format!(
            "eigenpair residual exceeds {:.1e} * |A| even for the Jacobi fallback",
            tolerance::EIGEN_RESIDUAL
        ))
    })
}

/// Sorts eigenpairs ascending and accepts them only if every eigenvalue is
/// finite and every pair satisfies `|A v - lambda v| <= 1e-9 |A|_F`; a NaN
/// residual fails the comparison and is rejected with the rest.
fn checked_eigenpairs(
    herm: &CMatrix,
    values: Vec<f64>,
    vectors: CMatrix,
) -> Option<(Vec<f64>, CMatrix)> {
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted_vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        sorted_vectors.set_column(col, &vectors.column(i));
    }
    let scale = herm.norm().max(f64::MIN_POSITIVE);
    for (col, &value) in sorted_values.iter().enumerate() {
        let v = sorted_vectors.column(col);
        let residual = (herm * v - v.scale(value)).norm();
        if !(residual <= tolerance::EIGEN_RESIDUAL * scale) {
            return None;
        }
    }
    Some((sorted_values, sorted_vectors))
}

/// Cyclic-by-row Jacobi diagonalization for Hermitian matrices.
///
/// Each pivot `(p, q)` is phase-reduced to a real 2x2 problem and rotated
/// out with the smaller-angle root, so off-diagonal mass decreases
/// monotonically and the sweep converges for every finite Hermitian input.
fn jacobi_hermitian(herm: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = herm.nrows();
    let mut a = herm.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _ in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                let phase = apq.unscale(r);
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let w = (1.0 + tau * tau).sqrt();
                // smaller-magnitude root of t^2 - 2 tau t - 1 = 0
                let t = if tau >= 0.0 { -1.0 / (tau + w) } else { 1.0 / (w - tau) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, -s], [s conj(phase), c conj(phase)]] on (p, q)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * (phase.conj() * s);
                    a[(i, q)] = aip * (-s) + aiq * (phase.conj() * c);
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * (phase.conj() * s);
                    v[(i, q)] = vip * (-s) + viq * (phase.conj() * c);
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c + aqj * (phase * s);
                    a[(q, j)] = apj * (-s) + aqj * (phase * c);
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                a[(p, p)] = C64::new(app, 0.0);
                a[(q, q)] = C64::new(aqq, 0.0);
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)].re).collect();
    (values, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cutoff_dimensions_and_label_roundtrip() {
        for cutoff in [Cutoff::PerMode(3), Cutoff::Total(5)] {
            let labels = cutoff.labels();
            assert_eq!(labels.len(), cutoff.dim());
            for (idx, &(n, k)) in labels.iter().enumerate() {
                assert!(cutoff.contains(n, k));
                assert_eq!(cutoff.index_of(n, k), Some(idx));
                assert_eq!(cutoff.label_at(idx), (n, k));
            }
        }
        assert_eq!(Cutoff::PerMode(3).dim(), 16);
        assert_eq!(Cutoff::Total(5).dim(), 21);
        assert_eq!(Cutoff::Total(0).dim(), 1);
        assert_eq!(Cutoff::PerMode(2).index_of(1, 2), Some(5));
        assert_eq!(Cutoff::Total(4).index_of(1, 1), Some(4));
        assert_eq!(Cutoff::Total(2).index_of(2, 1), None);
    }

    #[test]
    fn coherent_vacuum_amplitude_is_exact() {
        let v = FockVector::coherent(c(0.0, 0.0), 5);
        assert_eq!(v.coefficients[0], c(1.0, 0.0));
        for n in 1..=5 {
            assert_eq!(v.coefficients[n], c(0.0, 0.0));
        }
        assert_eq!(v.tail_mass, 0.0);
    }

    #[test]
    fn coherent_unit_amplitude_matches_series() {
        let v = FockVector::coherent(c(1.0, 0.0), 20);
        assert!((v.coefficients[0].re - (-0.5f64).exp()).abs() < 1e-15);
        assert!(v.tail_mass < 1e-12);
        // Independent series: coefficient_n = e^{-1/2} / sqrt(n!).
        let mut fact = 1.0;
        for n in 0..=20usize {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-0.5f64).exp() / fact.sqrt();
            assert!((v.coefficients[n].re - expected).abs() < 1e-14);
            assert!(v.coefficients[n].im.abs() < 1e-300);
        }
    }

    #[test]
    fn coherent_tail_matches_partial_poisson_sum() {
        let v = FockVector::coherent(c(2.0, 0.0), 4);
        let mut partial = 0.0;
        let mut term = (-4.0f64).exp();
        for n in 0..=4usize {
            if n > 0 {
                term *= 4.0 / n as f64;
            }
            partial += term;
        }
        assert!((v.tail_mass - (1.0 - partial)).abs() < 1e-13);
    }

    #[test]
    fn coherent_norm_accounts_for_tail() {
        for (re, im) in [(0.3, -1.2), (4.0, 3.0), (-8.0, 0.0), (5.0, -5.0)] {
            let v = FockVector::coherent(c(re, im), 200);
            assert!((v.norm_sqr() + v.tail_mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_unitary_matches_exponent_table() {
        let cutoff = Cutoff::Total(3);
        let id = theta_unitary(0.0, 0.0, cutoff);
        assert_eq!(id.matrix(), TwoModeOperator::identity(cutoff).matrix());

        let u = theta_unitary(std::f64::consts::PI, 0.0, cutoff);
        let e = u.entry((1, 0), (1, 0));
        assert!((e - c(-1.0, 0.0)).norm() < 1e-15);

        let u = theta_unitary(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, cutoff);
        let e = u.entry((1, 1), (1, 1));
        assert!((e - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn theta_unitary_inverse_is_negated_angles() {
        let cutoff = Cutoff::PerMode(4);
        for (a, b) in [(0.7, -0.3), (2.9, 1.1), (-5.0, 4.2)] {
            let u = theta_unitary(a, b, cutoff);
            let v = theta_unitary(-a, -b, cutoff);
            let prod = u.matrix() * v.matrix();
            let dev = (&prod - CMatrix::identity(cutoff.dim(), cutoff.dim())).norm();
            assert!(dev < 1e-13, "inverse deviation {dev}");
        }
    }

    #[test]
    fn sum_projections_resolve_identity() {
        let cutoff = Cutoff::Total(4);
        let p0 = number_sum_projection(0, cutoff);
        assert_eq!(p0.matrix().trace(), c(1.0, 0.0));

        let p2 = number_sum_projection(2, cutoff);
        assert_eq!(p2.matrix().trace(), c(3.0, 0.0));
        let sq = p2.matrix() * p2.matrix();
        assert_eq!(&sq, p2.matrix());

        let mut total = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        for s in 0..=4 {
            total += number_sum_projection(s, cutoff).matrix();
        }
        assert_eq!(total, CMatrix::identity(cutoff.dim(), cutoff.dim()));
    }

    #[test]
    fn diff_projections_enumerate_labels() {
        let p = number_diff_projection(0, Cutoff::PerMode(2));
        assert_eq!(p.matrix().trace(), c(3.0, 0.0));
        assert_eq!(p.entry((1, 1), (1, 1)), c(1.0, 0.0));

        let p = number_diff_projection(-1, Cutoff::PerMode(1));
        assert_eq!(p.matrix().trace(), c(1.0, 0.0));
        assert_eq!(p.entry((0, 1), (0, 1)), c(1.0, 0.0));

        let cutoff = Cutoff::Total(3);
        let p = number_diff_projection(7, cutoff);
        assert_eq!(p.matrix().norm(), 0.0);

        let mut total = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        for d in -3..=3 {
            total += number_diff_projection(d, cutoff).matrix();
        }
        assert_eq!(total, CMatrix::identity(cutoff.dim(), cutoff.dim()));
    }

    #[test]
    fn eigenvalues_of_small_hermitian_matrices() {
        let id = TwoModeOperator::identity(Cutoff::PerMode(1));
        assert_eq!(hermitian_eigenvalues(&id).unwrap(), vec![1.0; 4]);

        let p = number_sum_projection(1, Cutoff::Total(2));
        let eigs = hermitian_eigenvalues(&p).unwrap();
        assert_eq!(eigs.len(), 6);
        for e in &eigs[..4] {
            assert!(e.abs() < 1e-12);
        }
        for e in &eigs[4..] {
            assert!((e - 1.0).abs() < 1e-12);
        }

        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0, 0.0), c(-1.0, 0.0)]));
        let eigs = hermitian_eigenvalues_of(&m).unwrap();
        assert!((eigs[0] + 1.0).abs() < 1e-14 && (eigs[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_reject_non_hermitian_input() {
        let mut m = CMatrix::identity(4, 4);
        m[(0, 1)] = c(0.5, 0.0);
        let op = TwoModeOperator::new(Cutoff::PerMode(1), m, false).unwrap();
        match hermitian_eigenvalues(&op) {
            Err(Error::NonHermitianInput { residual }) => assert!(residual > 0.4),
            other => panic!("expected NonHermitianInput, got {other:?}"),
        }
    }

    #[test]
    fn eigendecomposition_reconstructs_matrix() {
        // Fixed non-trivial Hermitian matrix.
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.3, 0.4),
                c(-0.1, 0.2),
                c(0.3, -0.4),
                c(1.0, 0.0),
                c(0.5, -0.6),
                c(-0.1, -0.2),
                c(0.5, 0.6),
                c(-1.0, 0.0),
            ],
        );
        let (values, vectors) = hermitian_eigendecomposition(&m).unwrap();
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            3,
            values.iter().map(|&v| c(v, 0.0)),
        ));
        let rebuilt = &vectors * diag * vectors.adjoint();
        assert!((&rebuilt - &m).norm() < 1e-13);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = values.iter().sum();
        assert!((trace - 2.0).abs() < 1e-13);
    }

    #[test]
    fn states_validate_structure() {
        let cutoff = Cutoff::Total(2);
        let st = TwoModeState::number(1, 1, cutoff).unwrap();
        assert!((st.trace() - 1.0).abs() < 1e-15);
        assert_eq!(st.entry((1, 1), (1, 1)), c(1.0, 0.0));

        let coh = TwoModeState::coherent(c(0.4, 0.1), c(-0.2, 0.3), Cutoff::PerMode(12));
        assert!(coh.trace() <= 1.0 + 1e-12 && coh.trace() > 0.9);

        // A matrix with a negative direction must be rejected.
        let mut bad = CMatrix::zeros(6, 6);
        bad[(0, 0)] = c(-0.5, 0.0);
        bad[(1, 1)] = c(1.0, 0.0);
        assert!(TwoModeState::from_matrix(cutoff, bad).is_err());

        // Superposition across sectors, normalized.
        let mut coeffs = CVector::zeros(cutoff.dim());
        coeffs[cutoff.index_of(0, 1).unwrap()] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        coeffs[cutoff.index_of(1, 0).unwrap()] = c(0.0, std::f64::consts::FRAC_1_SQRT_2);
        let v = TwoModeVector::from_coeffs(cutoff, coeffs).unwrap();
        let st = TwoModeState::pure(&v).unwrap();
        assert!((st.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_structure_flag_is_verified() {
        let cutoff = Cutoff::Total(2);
        let mut m = CMatrix::zeros(cutoff.dim(), cutoff.dim());
        let i01 = cutoff.index_of(0, 1).unwrap();
        let i00 = cutoff.index_of(0, 0).unwrap();
        m[(i01, i00)] = c(1.0, 0.0);
        assert!(TwoModeOperator::new(cutoff, m.clone(), true).is_err());
        assert!(TwoModeOperator::new(cutoff, m, false).is_ok());
    }

    #[test]
    fn product_vector_respects_total_cutoff() {
        let a = FockVector::coherent(c(1.0, 0.0), 6);
        let b = FockVector::coherent(c(0.0, 1.0), 6);
        let v = TwoModeVector::product(&a, &b, Cutoff::Total(6));
        // Label (4, 3) has total 7 > 6 and must be absent.
        assert_eq!(v.coeff(4, 3), c(0.0, 0.0));
        let w = v.coeff(2, 3);
        assert!((w - a.coefficients[2] * b.coefficients[3]).norm() < 1e-15);
    }
}
