//! Companions of the difference observable: the number-difference shift and
//! its spectral measure, their commutation structure, and the cosine, sine
//! and exponential operators together with the block spectrum of the
//! unitary completion.

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::analysis::cyclic_moment;
use crate::error::{Error, Result};
use crate::fock::{
    hermitian_eigendecomposition, theta_unitary, C64, CMatrix, Cutoff, TwoModeOperator,
};
use crate::phase1::{eval_phase, fourier_weight, IntervalSet, PhaseKernel};
use crate::phasediff::{max_abs, DiffKernel};
use crate::tolerance;

/// Double-bracket label: number-difference index `k` and radial index `n`.
///
/// `|k,n>>` names the Fock vector `|n+k, n>` for `k >= 0` and `|n, n-k>`
/// for `k < 0`; the number difference of the image is `k` and the radial
/// index is the smaller occupation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BanLabel {
    pub k: i64,
    pub n: usize,
}

impl BanLabel {
    /// Fock occupation pair of `|k,n>>`.
    pub fn to_fock(self) -> (usize, usize) {
        if self.k >= 0 {
            (self.n + self.k as usize, self.n)
        } else {
            (self.n, self.n + (-self.k) as usize)
        }
    }

    /// Double-bracket label of a Fock pair; inverse of [`Self::to_fock`].
    pub fn from_fock(n1: usize, n2: usize) -> Self {
        Self {
            k: n1 as i64 - n2 as i64,
            n: n1.min(n2),
        }
    }
}

/// Bijection between double-bracket labels and the Fock labels of a cutoff.
#[derive(Clone, Copy, Debug)]
pub struct BanBasisMap {
    cutoff: Cutoff,
}

impl BanBasisMap {
    pub fn new(cutoff: Cutoff) -> Self {
        Self { cutoff }
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    /// Cutoff position of `|k,n>>`, when its Fock image lies inside.
    pub fn index_of(&self, label: BanLabel) -> Option<usize> {
        let (n1, n2) = label.to_fock();
        self.cutoff.index_of(n1, n2)
    }

    /// Every double-bracket label of the cutoff, in cutoff index order.
    pub fn labels(&self) -> Vec<BanLabel> {
        self.cutoff
            .labels()
            .into_iter()
            .map(|(n1, n2)| BanLabel::from_fock(n1, n2))
            .collect()
    }
}

/// A difference-index shift assembled label by label; columns whose image
/// leaves the cutoff are zeroed and reported.
#[derive(Clone, Debug)]
pub struct BanShift {
    pub operator: TwoModeOperator,
    /// Source labels whose shifted image fell outside the cutoff.
    pub boundary: Vec<BanLabel>,
}

fn bracket_shift(cutoff: Cutoff, step: i64) -> BanShift {
    let map = BanBasisMap::new(cutoff);
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut boundary = Vec::new();
    for label in map.labels() {
        let col = map.index_of(label).expect("label enumerated from cutoff");
        let image = BanLabel {
            k: label.k - step,
            n: label.n,
        };
        match map.index_of(image) {
            Some(row) => matrix[(row, col)] = C64::new(1.0, 0.0),
            None => boundary.push(label),
        }
    }
    BanShift {
        operator: TwoModeOperator::new_unchecked(cutoff, matrix, false),
        boundary,
    }
}

/// The unitary shift `D = sum |k-1,n>><<k,n|` lowering the difference index,
/// restricted to the cutoff.
pub fn ban_d(cutoff: Cutoff) -> BanShift {
    bracket_shift(cutoff, 1)
}

/// The step-two shift `W = sum |k-2,n>><<k,n|`, the projection-valued
/// solution of the factor-two covariance condition.
pub fn factor2_projection_solution(cutoff: Cutoff) -> BanShift {
    bracket_shift(cutoff, 2)
}

/// Spectral measure of the difference shift:
/// `<<k,n| B(X) |l,n'>> = delta_{n,n'} nu_{k-l}(X)`.
pub fn ban_b(x: &IntervalSet, cutoff: Cutoff) -> TwoModeOperator {
    let map = BanBasisMap::new(cutoff);
    let labels = map.labels();
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (i, a) in labels.iter().enumerate() {
        for (j, b) in labels.iter().enumerate() {
            if a.n == b.n {
                matrix[(i, j)] = fourier_weight(a.k - b.k, x);
            }
        }
    }
    TwoModeOperator::new_unchecked(cutoff, matrix, false)
}

/// Residuals of the two candidate covariance laws for the measure `B`.
#[derive(Clone, Copy, Debug)]
pub struct BanCovariance {
    /// `max | V(b) B(X) V(b)* - B(X + b) |`; vanishes.
    pub factor1: f64,
    /// `max | V(b) B(X) V(b)* - B(X + 2b) |`; does not vanish for generic b,
    /// separating `B` from the difference observables.
    pub factor2: f64,
}

/// Conjugates `B(X)` by the difference rotation `V(b) = e^{i b (N1 - N2)}`
/// and measures it against both the step-`b` and the step-`2b` shifted
/// measures. Diagonal conjugation commutes with the truncation, so the
/// factor-one residual is rounding-level at any cutoff.
pub fn ban_covariance_residuals(x: &IntervalSet, beta: f64, cutoff: Cutoff) -> BanCovariance {
    let b = ban_b(x, cutoff);
    let v = theta_unitary(beta, -beta, cutoff);
    let conjugated = v.matrix() * b.matrix() * v.matrix().adjoint();
    let factor1 = max_abs(&(&conjugated - ban_b(&x.shift(beta), cutoff).matrix()));
    let factor2 = max_abs(&(&conjugated - ban_b(&x.shift(2.0 * beta), cutoff).matrix()));
    BanCovariance { factor1, factor2 }
}

/// Interior residuals of the three shift commutation identities.
#[derive(Clone, Debug)]
pub struct CommutatorReport {
    /// `max || ([D, DN] - D) e ||` over interior columns.
    pub ban_shift_residual: f64,
    /// Columns of `D` whose image leaves the cutoff.
    pub ban_shift_boundary: usize,
    /// `max || ([C, DN] - 2C) e ||` over interior columns, `C` the first
    /// cyclic moment of the supplied kernel.
    pub cyclic_residual: f64,
    /// Columns of `C` whose image leaves the cutoff (none at a total-number
    /// cutoff, where the moment is sector preserving).
    pub cyclic_boundary: usize,
    /// Single-mode analogue `max || ([c, N] - c) e ||` for the first cyclic
    /// moment of the canonical phase kernel; exact at every column.
    pub single_mode_residual: f64,
}

fn number_diff_diagonal(cutoff: Cutoff) -> CMatrix {
    let dim = cutoff.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (idx, (n, k)) in cutoff.labels().into_iter().enumerate() {
        m[(idx, idx)] = C64::new(n as f64 - k as f64, 0.0);
    }
    m
}

fn max_interior_col_norm(m: &CMatrix, interior: &[bool]) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        if interior[j] {
            worst = worst.max(m.column(j).norm());
        }
    }
    worst
}

/// Verifies the shift commutation identities: the difference shift advances
/// by one difference step per commutator with `DN`, the first cyclic moment
/// of a difference kernel by two, and the single-mode cyclic moment against
/// its own number operator by one. Exact on interior columns; boundary
/// columns are counted, not asserted.
pub fn commutator_checks(kernel: &DiffKernel, cutoff: Cutoff) -> Result<CommutatorReport> {
    if kernel.s_max() < cutoff.max_total() {
        return Err(Error::CutoffMismatch(format!(
            "kernel reaches sector {}, cutoff needs {}",
            kernel.s_max(),
            cutoff.max_total()
        )));
    }
    let dim = cutoff.dim();
    let labels = cutoff.labels();
    let dn = number_diff_diagonal(cutoff);

    let shift = ban_d(cutoff);
    let map = BanBasisMap::new(cutoff);
    let mut interior = vec![true; dim];
    for label in &shift.boundary {
        interior[map.index_of(*label).expect("boundary label inside cutoff")] = false;
    }
    let d = shift.operator.matrix();
    let commutator = d * &dn - &dn * d;
    let ban_shift_residual = max_interior_col_norm(&(commutator - d), &interior);

    let mut c = CMatrix::zeros(dim, dim);
    let mut interior = vec![true; dim];
    let mut cyclic_boundary = 0usize;
    for (j, &(a, b)) in labels.iter().enumerate() {
        if a == 0 {
            continue; // annihilated exactly, boundary-free
        }
        match cutoff.index_of(a - 1, b + 1) {
            Some(i) => c[(i, j)] = kernel.block(a + b)[(a - 1, a)],
            None => {
                interior[j] = false;
                cyclic_boundary += 1;
            }
        }
    }
    let commutator = &c * &dn - &dn * &c;
    let cyclic_residual = max_interior_col_norm(&(commutator - c.scale(2.0)), &interior);

    let n1 = cutoff.max_per_mode();
    let single = PhaseKernel::canonical(n1);
    let mut c1 = CMatrix::zeros(n1 + 1, n1 + 1);
    let mut number = CMatrix::zeros(n1 + 1, n1 + 1);
    for n in 0..=n1 {
        number[(n, n)] = C64::new(n as f64, 0.0);
        if n + 1 <= n1 {
            c1[(n, n + 1)] = single.entry(n, n + 1);
        }
    }
    let commutator = &c1 * &number - &number * &c1;
    let single_mode_residual = max_abs(&(commutator - c1));

    Ok(CommutatorReport {
        ban_shift_residual,
        ban_shift_boundary: shift.boundary.len(),
        cyclic_residual,
        cyclic_boundary,
        single_mode_residual,
    })
}

/// Traces `(tr(T (x) |0><0| B(X)), tr(T E_1(X)))` for a first-mode density
/// matrix `T` against the canonical single-mode observable: the vacuum on
/// the second mode reduces the difference measure to single-mode phase
/// statistics exactly.
pub fn ban_vacuum_reduction(
    t: &CMatrix,
    x: &IntervalSet,
    cutoff: Cutoff,
) -> Result<(f64, f64)> {
    if t.nrows() != t.ncols() || t.nrows() == 0 {
        return Err(Error::CutoffMismatch(format!(
            "density matrix must be square and nonempty, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let herm = crate::fock::hermiticity_residual(t);
    if herm > tolerance::VALIDATION {
        return Err(Error::NonHermitianInput { residual: herm });
    }
    let d = t.nrows();
    if cutoff.index_of(d - 1, 0).is_none() {
        return Err(Error::CutoffMismatch(format!(
            "density matrix reaches occupation {}, outside the cutoff",
            d - 1
        )));
    }
    let b = ban_b(x, cutoff);
    let mut two_mode = C64::new(0.0, 0.0);
    for n in 0..d {
        for m in 0..d {
            two_mode += t[(n, m)] * b.entry((m, 0), (n, 0));
        }
    }
    let single_matrix = eval_phase(&PhaseKernel::canonical(d - 1), x);
    let mut single = C64::new(0.0, 0.0);
    for n in 0..d {
        for m in 0..d {
            single += t[(n, m)] * single_matrix[(m, n)];
        }
    }
    if two_mode.im.abs() > tolerance::VALIDATION || single.im.abs() > tolerance::VALIDATION {
        return Err(Error::ValidationFailed(format!(
            "trace came out non-real (imaginary parts {:.3e}, {:.3e})",
            two_mode.im, single.im
        )));
    }
    Ok((two_mode.re, single.re))
}

/// Largest interior entry of `B(X)^2 - B(X)`.
///
/// On the untruncated difference lattice `B` is a projection, but the
/// truncated square misses the Fourier tail of the indicator, which decays
/// only like `1/margin`; the defect is therefore reported for inspection
/// rather than asserted small. A label is interior when it sits at least
/// `margin` steps from both ends of its fiber's difference range.
pub fn ban_b_idempotence_defect(x: &IntervalSet, cutoff: Cutoff, margin: usize) -> f64 {
    let b = ban_b(x, cutoff);
    let square = b.matrix() * b.matrix();
    let diff = &square - b.matrix();
    let labels = BanBasisMap::new(cutoff).labels();
    let mut fiber_range: HashMap<usize, (i64, i64)> = HashMap::new();
    for label in &labels {
        let entry = fiber_range.entry(label.n).or_insert((label.k, label.k));
        entry.0 = entry.0.min(label.k);
        entry.1 = entry.1.max(label.k);
    }
    let interior: Vec<bool> = labels
        .iter()
        .map(|label| {
            let (lo, hi) = fiber_range[&label.n];
            label.k - lo >= margin as i64 && hi - label.k >= margin as i64
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if interior[i] && interior[j] {
                worst = worst.max(diff[(i, j)].norm());
            }
        }
    }
    worst
}

/// Cosine and sine difference operators `(V + V*)/2` and `(V - V*)/(2i)`
/// for the first cyclic moment `V` of the canonical difference kernel.
///
/// Both are Hermitian contractions; they fail to commute, with
/// `[C, S] = (V*V - VV*)/(2i)` supported on the sector endpoints.
pub fn sg_operators(s_max: usize) -> (TwoModeOperator, TwoModeOperator) {
    let v = cyclic_moment(&DiffKernel::canonical(s_max), 1);
    let adj = v.matrix().adjoint();
    let c12 = (v.matrix() + &adj).scale(0.5);
    let s12 = (v.matrix() - &adj).map(|e| e * C64::new(0.0, -0.5));
    let cutoff = v.cutoff();
    (
        TwoModeOperator::new_unchecked(cutoff, c12, true),
        TwoModeOperator::new_unchecked(cutoff, s12, true),
    )
}

/// Residual of the polar identity `a (x) a* = V sqrt(N (x) (N + I))`: the
/// lowering-raising product equals the first cyclic moment times the radial
/// factor `sqrt(n (k+1))`, sector-exactly at a total-number cutoff.
pub fn ll_polar_check(s_max: usize) -> f64 {
    let cutoff = Cutoff::Total(s_max);
    let dim = cutoff.dim();
    let mut a = CMatrix::zeros(dim, dim);
    let mut r = CMatrix::zeros(dim, dim);
    for (j, (n, k)) in cutoff.labels().into_iter().enumerate() {
        let step = (n as f64 * (k + 1) as f64).sqrt();
        r[(j, j)] = C64::new(step, 0.0);
        if n >= 1 {
            let i = cutoff.index_of(n - 1, k + 1).expect("total number preserved");
            a[(i, j)] = C64::new(step, 0.0);
        }
    }
    let v = cyclic_moment(&DiffKernel::canonical(s_max), 1);
    max_abs(&(&a - v.matrix() * &r))
}

/// Restriction of the unitary completion `V + T` to the total-number sector
/// `s`, in first-mode occupation order: a cyclic permutation matrix.
///
/// `T = sum |n,0><0,n|` fills exactly the defect of the cyclic moment `V`,
/// wrapping the one basis vector each sector that `V` annihilates back to
/// the sector's other end.
pub fn e12_sector_block(s: usize) -> CMatrix {
    let cutoff = Cutoff::Total(s);
    let v = cyclic_moment(&DiffKernel::canonical(s), 1);
    let mut full = v.matrix().clone();
    for n in 0..=s {
        let i = cutoff.index_of(n, 0).expect("inside cutoff");
        let j = cutoff.index_of(0, n).expect("inside cutoff");
        full[(i, j)] += C64::new(1.0, 0.0);
    }
    let mut block = CMatrix::zeros(s + 1, s + 1);
    for row in 0..=s {
        let i = cutoff.index_of(row, s - row).expect("sector label");
        for col in 0..=s {
            let j = cutoff.index_of(col, s - col).expect("sector label");
            block[(row, col)] = full[(i, j)];
        }
    }
    block
}

/// Ascending eigenphases in `[0, 2pi)` of the sector-`s` block of the
/// unitary completion; analytically `{2 pi r / (s+1)}`.
pub fn phi12_block_eigenphases(s: usize) -> Result<Vec<f64>> {
    unitary_eigenphases(&e12_sector_block(s))
}

/// Ascending eigenphases in `[0, 2pi)` of a unitary matrix.
///
/// Diagonalizes the commuting Hermitian pair `(U + U*)/2`, `(U - U*)/(2i)`:
/// cosine clusters are split by the sine part, the joint vectors are
/// eigenvectors of `U`, and each phase is read off a verified Rayleigh
/// quotient, so degenerate cosines (phase pairs `p`, `2pi - p`) resolve
/// cleanly.
pub fn unitary_eigenphases(u: &CMatrix) -> Result<Vec<f64>> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::CutoffMismatch(format!(
            "eigenphases need a square matrix, got {}x{}",
            n,
            u.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let unitarity = max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)));
    if unitarity > tolerance::VALIDATION {
        return Err(Error::ValidationFailed(format!(
            "matrix is not unitary (max |U*U - I| = {unitarity:.3e})"
        )));
    }
    let h = (u + u.adjoint()).scale(0.5);
    let k = (u - u.adjoint()).map(|e| e * C64::new(0.0, -0.5));
    let (hv, hq) = hermitian_eigendecomposition(&h)?;
    let mut phases = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && hv[end] - hv[end - 1] <= 1e-8 {
            end += 1;
        }
        let q = hq.columns(start, end - start).into_owned();
        let projected = q.adjoint() * &k * &q;
        let (_, w) = hermitian_eigendecomposition(&projected)?;
        let joint = &q * &w;
        for col in 0..joint.ncols() {
            let vector = joint.column(col).into_owned();
            let image = u * &vector;
            let lambda = (vector.adjoint() * &image)[(0, 0)];
            let residual = (&image - vector.map(|e| e * lambda)).norm();
            if residual > tolerance::EIGEN_RESIDUAL {
                return Err(Error::EigenFailure(format!(
                    "joint eigenvector residual {residual:.3e}"
                )));
            }
            let mut phase = lambda.arg().rem_euclid(TAU);
            if TAU - phase < 1e-9 {
                phase = 0.0;
            }
            phases.push(phase);
        }
        start = end;
    }
    phases.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
    Ok(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        hermitian_eigenvalues, hermitian_eigenvalues_of, number_diff_projection,
        number_sum_projection,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ban_labels_are_a_number_difference_bijection() {
        for cutoff in [Cutoff::Total(9), Cutoff::PerMode(4)] {
            let map = BanBasisMap::new(cutoff);
            let labels = map.labels();
            assert_eq!(labels.len(), cutoff.dim());
            for (idx, label) in labels.iter().enumerate() {
                let (n1, n2) = label.to_fock();
                assert_eq!(n1 as i64 - n2 as i64, label.k);
                assert_eq!(n1.min(n2), label.n);
                assert_eq!(map.index_of(*label), Some(idx));
                assert_eq!(BanLabel::from_fock(n1, n2), *label);
            }
        }
        assert_eq!(BanLabel { k: 1, n: 0 }.to_fock(), (1, 0));
        assert_eq!(BanLabel { k: -1, n: 0 }.to_fock(), (0, 1));
        assert_eq!(BanLabel { k: -3, n: 2 }.to_fock(), (2, 5));
    }

    #[test]
    fn difference_shift_steps_down_and_reports_the_boundary() {
        let shift = ban_d(Cutoff::Total(6));
        // |1,0>> = |1,0| drops to |0,0>> = |0,0>; |0,0>> drops to |-1,0>> = |0,1>.
        assert_eq!(shift.operator.entry((0, 0), (1, 0)), c(1.0, 0.0));
        assert_eq!(shift.operator.entry((0, 1), (0, 0)), c(1.0, 0.0));
        // Every boundary label sits on the top shell with k <= 0, where the
        // image would raise the total number past the cutoff.
        for label in &shift.boundary {
            let (n1, n2) = label.to_fock();
            assert!(label.k <= 0);
            assert_eq!(n1 + n2, 6);
        }
        assert_eq!(shift.boundary.len(), 4);
        // Interior columns are permutation columns; boundary columns vanish.
        let map = BanBasisMap::new(Cutoff::Total(6));
        for label in map.labels() {
            let j = map.index_of(label).expect("inside");
            let norm = shift.operator.matrix().column(j).norm();
            if shift.boundary.contains(&label) {
                assert_eq!(norm, 0.0);
            } else {
                assert!((norm - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ban_measure_matches_closed_forms_and_is_positive() {
        let cutoff = Cutoff::Total(5);
        let full = ban_b(&IntervalSet::full_circle(), cutoff);
        assert!(
            max_abs(&(full.matrix() - TwoModeOperator::identity(cutoff).matrix())) < 1e-15
        );
        let half = ban_b(&IntervalSet::new(&[(0.0, PI)]).expect("arc"), cutoff);
        // <<1,0| B |0,0>> at Fock labels ((1,0),(0,0)) carries nu_1 = i/pi.
        let entry = half.entry((1, 0), (0, 0));
        assert!((entry - c(0.0, 1.0 / PI)).norm() < 1e-15);
        let eigs = hermitian_eigenvalues(&half).expect("hermitian");
        assert!(eigs.iter().all(|e| *e >= -1e-10));
        assert!(eigs.iter().all(|e| *e <= 1.0 + 1e-10));
    }

    #[test]
    fn ban_covariance_carries_factor_one_not_two() {
        let cutoff = Cutoff::Total(8);
        let x = IntervalSet::new(&[(0.0, 1.0)]).expect("arc");
        let report = ban_covariance_residuals(&x, FRAC_PI_4, cutoff);
        assert!(report.factor1 < 1e-12, "factor1 {:.3e}", report.factor1);
        assert!(report.factor2 > 0.1, "factor2 {:.3e}", report.factor2);

        let zero = ban_covariance_residuals(&x, 0.0, cutoff);
        assert_eq!(zero.factor1, 0.0);
        assert_eq!(zero.factor2, 0.0);

        let wide = IntervalSet::new(&[(0.3, 1.2), (4.0, 5.5)]).expect("arcs");
        let generic = ban_covariance_residuals(&wide, 1.234, cutoff);
        assert!(generic.factor1 < 1e-12);
    }

    #[test]
    fn ban_measure_is_fiber_diagonal_not_sector_diagonal() {
        let cutoff = Cutoff::Total(7);
        let x = IntervalSet::new(&[(0.0, PI)]).expect("arc");
        let b = ban_b(&x, cutoff);
        // Commutes with the min-occupation fiber projections by its
        // n-diagonal structure...
        let labels = BanBasisMap::new(cutoff).labels();
        for fiber in 0..=3 {
            let dim = cutoff.dim();
            let mut q = CMatrix::zeros(dim, dim);
            for (idx, label) in labels.iter().enumerate() {
                if label.n == fiber {
                    q[(idx, idx)] = c(1.0, 0.0);
                }
            }
            let comm = &q * b.matrix() - b.matrix() * &q;
            assert!(max_abs(&comm) < 1e-13);
        }
        // ...but not with the number sum or the number difference.
        let p_sum = number_sum_projection(2, cutoff);
        let comm = p_sum.matrix() * b.matrix() - b.matrix() * p_sum.matrix();
        assert!(max_abs(&comm) > 0.1);
        let p_diff = number_diff_projection(1, cutoff);
        let comm = p_diff.matrix() * b.matrix() - b.matrix() * p_diff.matrix();
        assert!(max_abs(&comm) > 0.1);
    }

    #[test]
    fn idempotence_defect_decays_with_the_interior_margin() {
        let x = IntervalSet::new(&[(0.0, PI)]).expect("arc");
        let d5 = ban_b_idempotence_defect(&x, Cutoff::Total(20), 5);
        let d9 = ban_b_idempotence_defect(&x, Cutoff::Total(20), 9);
        // The projection property fails at truncation by the indicator's
        // Fourier tail: visible defect, shrinking with the margin.
        assert!(d5 > 1e-3, "margin-5 defect {d5:.3e}");
        assert!(d9 < d5);
        assert!(ban_b_idempotence_defect(&IntervalSet::full_circle(), Cutoff::Total(8), 2) < 1e-15);
    }

    #[test]
    fn commutator_identities_hold_on_the_interior() {
        let kernel = DiffKernel::canonical(20);
        let report = commutator_checks(&kernel, Cutoff::Total(20)).expect("sized kernel");
        assert!(report.ban_shift_residual <= 1e-12);
        assert!(report.cyclic_residual <= 1e-12);
        assert!(report.single_mode_residual <= 1e-12);
        // Top-shell labels with k <= 0 are the only difference-shift
        // boundary; the cyclic moment is sector preserving.
        assert_eq!(report.ban_shift_boundary, 11);
        assert_eq!(report.cyclic_boundary, 0);

        assert!(matches!(
            commutator_checks(&DiffKernel::canonical(3), Cutoff::Total(5)),
            Err(Error::CutoffMismatch(_))
        ));
    }

    #[test]
    fn cyclic_commutator_factor_is_two_not_one() {
        let kernel = DiffKernel::canonical(6);
        let cutoff = Cutoff::Total(6);
        let v = cyclic_moment(&kernel, 1);
        let dn = number_diff_diagonal(cutoff);
        let commutator = v.matrix() * &dn - &dn * v.matrix();
        // Substituting factor 1 leaves residual ||C e|| = 1 on any column
        // the moment does not annihilate, e.g. |1,0>.
        let wrong = &commutator - v.matrix();
        let j = cutoff.index_of(1, 0).expect("inside");
        assert!((wrong.column(j).norm() - 1.0).abs() < 1e-14);
        let right = &commutator - v.matrix().scale(2.0);
        assert!(max_abs(&right) < 1e-14);
    }

    #[test]
    fn vacuum_reduction_reproduces_single_mode_statistics() {
        let cutoff = Cutoff::Total(8);
        let half = IntervalSet::new(&[(0.0, PI)]).expect("arc");

        let vacuum = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let (two, one) = ban_vacuum_reduction(&vacuum, &half, cutoff).expect("vacuum");
        assert!((two - 0.5).abs() < 1e-15);
        assert!((one - 0.5).abs() < 1e-15);

        // |+><+| on [0, pi): the off-diagonal weight is purely imaginary,
        // so the cosine term integrates away and both sides stay 1/2; the
        // arc centered on phase zero picks up the full 1/pi enhancement.
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        let (two, one) = ban_vacuum_reduction(&plus, &half, cutoff).expect("plus");
        assert!((two - 0.5).abs() < 1e-12);
        assert!((one - 0.5).abs() < 1e-12);
        let centered = IntervalSet::centered(0.0, PI);
        let (two, one) = ban_vacuum_reduction(&plus, &centered, cutoff).expect("plus");
        assert!((two - (0.5 + 1.0 / PI)).abs() < 1e-12);
        assert!((one - (0.5 + 1.0 / PI)).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let d = rng.gen_range(1..=4usize);
            let mut t = CMatrix::zeros(d, d);
            // Random pure density from a random complex vector.
            let v: Vec<C64> = (0..d)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            for i in 0..d {
                for j in 0..d {
                    t[(i, j)] = v[i] * v[j].conj() / norm_sqr;
                }
            }
            let lo = rng.gen_range(0.0..3.0);
            let x = IntervalSet::new(&[(lo, lo + rng.gen_range(0.3..2.0))]).expect("arc");
            let (two, one) = ban_vacuum_reduction(&t, &x, cutoff).expect("draw");
            assert!((two - one).abs() < 1e-10, "two {two} one {one}");
        }

        let big = CMatrix::identity(12, 12).scale(1.0 / 12.0);
        assert!(matches!(
            ban_vacuum_reduction(&big, &half, cutoff),
            Err(Error::CutoffMismatch(_))
        ));
    }

    #[test]
    fn projection_solution_steps_by_two_and_intertwines() {
        let cutoff = Cutoff::Total(8);
        let w = factor2_projection_solution(cutoff);
        // |2,0>> = |2,0> maps to |0,0>> = |0,0>.
        assert_eq!(w.operator.entry((0, 0), (2, 0)), c(1.0, 0.0));
        for beta in [0.0, FRAC_PI_3, 2.1] {
            let v = theta_unitary(beta, -beta, cutoff);
            let conjugated = v.matrix() * w.operator.matrix() * v.matrix().adjoint();
            let expected = w
                .operator
                .matrix()
                .map(|e| e * C64::from_polar(1.0, -2.0 * beta));
            let residual = max_abs(&(&conjugated - &expected));
            if beta == 0.0 {
                assert_eq!(residual, 0.0);
            } else {
                assert!(residual < 1e-12, "residual {residual:.3e} at beta {beta}");
            }
        }
    }

    #[test]
    fn sine_cosine_operators_are_bounded_and_fail_to_commute() {
        let (c12, s12) = sg_operators(10);
        for op in [&c12, &s12] {
            let eigs = hermitian_eigenvalues(op).expect("hermitian");
            assert!(eigs.iter().all(|e| *e >= -1.0 - 1e-10 && *e <= 1.0 + 1e-10));
        }
        let v = cyclic_moment(&DiffKernel::canonical(10), 1);
        let recombined = c12.matrix() + s12.matrix().map(|e| e * c(0.0, 1.0));
        assert!(max_abs(&(&recombined - v.matrix())) < 1e-15);

        let comm = c12.matrix() * s12.matrix() - s12.matrix() * c12.matrix();
        // [C, S] = (V*V - VV*)/(2i) projects onto the sector endpoints:
        // zero on |0,0>, a quarter turn on |1,0>, operator norm one half.
        let cutoff = c12.cutoff();
        assert_eq!(comm.column(cutoff.index_of(0, 0).expect("o")).norm(), 0.0);
        let j = cutoff.index_of(1, 0).expect("inside");
        assert!((comm[(j, j)] - c(0.0, -0.5)).norm() < 1e-15);
        let herm = comm.map(|e| e * c(0.0, 1.0));
        let eigs = hermitian_eigenvalues_of(&herm).expect("hermitian");
        let norm = eigs.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        assert!((norm - 0.5).abs() < 1e-12);
    }

    #[test]
    fn polar_identity_is_sector_exact() {
        assert!(ll_polar_check(12) <= 1e-12);
        // a (x) a* sends |1,0> to |0,1> with weight sqrt(1 * 1).
        let cutoff = Cutoff::Total(3);
        let v = cyclic_moment(&DiffKernel::canonical(3), 1);
        assert_eq!(v.entry((0, 1), (1, 0)), c(1.0, 0.0));
        assert_eq!(cutoff.index_of(0, 1).is_some(), true);
    }

    #[test]
    fn unitary_completion_blocks_are_cyclic() {
        for s in [0usize, 1, 3, 7, 12] {
            let block = e12_sector_block(s);
            let phases = phi12_block_eigenphases(s).expect("unitary block");
            assert_eq!(phases.len(), s + 1);
            for (r, phase) in phases.iter().enumerate() {
                let expected = TAU * r as f64 / (s + 1) as f64;
                assert!(
                    (phase - expected).abs() < 1e-10,
                    "sector {s}, r {r}: {phase} vs {expected}"
                );
            }
            // A cyclic permutation returns to the identity in s+1 steps.
            let mut power = CMatrix::identity(s + 1, s + 1);
            for _ in 0..=s {
                power = &power * &block;
            }
            assert_eq!(max_abs(&(power - CMatrix::identity(s + 1, s + 1))), 0.0);
        }
        assert_eq!(phi12_block_eigenphases(1).expect("block"), vec![0.0, PI]);
        let quarter = phi12_block_eigenphases(3).expect("block");
        let expected = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
        for (p, e) in quarter.iter().zip(expected) {
            assert!((p - e).abs() < 1e-10);
        }
    }

    #[test]
    fn completion_fills_the_cyclic_moment_defect() {
        let s_max = 6;
        let cutoff = Cutoff::Total(s_max);
        let v = cyclic_moment(&DiffKernel::canonical(s_max), 1);
        let dim = cutoff.dim();
        let mut t = CMatrix::zeros(dim, dim);
        for n in 0..=s_max {
            let i = cutoff.index_of(n, 0).expect("inside");
            let j = cutoff.index_of(0, n).expect("inside");
            t[(i, j)] = c(1.0, 0.0);
        }
        let sum = t.adjoint() * &t + v.matrix().adjoint() * v.matrix();
        assert!(max_abs(&(sum - CMatrix::identity(dim, dim))) < 1e-13);
    }

    #[test]
    fn eigenphase_solver_rejects_bad_input() {
        let not_unitary = CMatrix::from_element(2, 2, c(0.5, 0.0));
        assert!(matches!(
            unitary_eigenphases(&not_unitary),
            Err(Error::ValidationFailed(_))
        ));
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(
            unitary_eigenphases(&rect),
            Err(Error::CutoffMismatch(_))
        ));
        assert_eq!(unitary_eigenphases(&CMatrix::zeros(0, 0)).expect("empty"), Vec::<f64>::new());
    }
}
