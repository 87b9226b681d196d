//! Phase-difference observables as sector-block kernels.
//!
//! A covariant phase-difference observable on the truncated two-mode space
//! is determined by a 4-index coefficient tensor `c[n, m, k, l]` that
//! vanishes unless `n - m = l - k`, is Hermitian with unit diagonal, and is
//! positive semidefinite. Since `n - m = l - k` is `n + k = m + l`, the
//! tensor is block diagonal over total-occupation sectors and is stored as
//! one Hermitian unit-diagonal PSD matrix `C^s` per sector, with
//! `C^s[n, m] = c[n, m, s-n, s-m]`. The observable's value on an arc set is
//! `<n,k| E(X) |m,l> = C^{n+k}[n, m] * fourier_weight(n - m, X)` within a
//! sector and zero across sectors.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{
    hermitian_eigendecomposition, hermitian_eigenvalues_of, hermiticity_residual,
    C64, CMatrix, CVector, Cutoff, TwoModeOperator, TwoModeState, TwoModeVector,
};
use crate::phase1::{eval_phase, fourier_weight, FixedPhase, IntervalSet, PhaseKernel};
use crate::tolerance;

/// Sector-block kernel of a phase-difference observable.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffKernel {
    /// `blocks[s]` is the `(s+1) x (s+1)` matrix `C^s`.
    blocks: Vec<CMatrix>,
}

impl DiffKernel {
    /// Kernel with every coefficient 1: the canonical phase difference.
    pub fn canonical(s_max: usize) -> Self {
        let blocks = (0..=s_max)
            .map(|s| CMatrix::from_element(s + 1, s + 1, C64::new(1.0, 0.0)))
            .collect();
        Self { blocks }
    }

    /// Difference of two single-mode observables:
    /// `C^s[n, m] = c1[n, m] * c2[s-n, s-m]`.
    pub fn from_pair(c1: &PhaseKernel, c2: &PhaseKernel, s_max: usize) -> Result<Self> {
        for (kernel, side) in [(c1, "first"), (c2, "second")] {
            if kernel.dim() < s_max + 1 {
                return Err(Error::DimensionTooSmall {
                    dim: kernel.dim(),
                    needed: s_max + 1,
                    context: match side {
                        "first" => "first single-mode kernel",
                        _ => "second single-mode kernel",
                    },
                });
            }
        }
        let blocks = (0..=s_max)
            .map(|s| {
                CMatrix::from_fn(s + 1, s + 1, |n, m| {
                    c1.entry(n, m) * c2.entry(s - n, s - m)
                })
            })
            .collect();
        Ok(Self { blocks })
    }

    /// Gram construction: `C^s[n, m] = <xi_{n,s-n} | xi_{m,s-m}>`.
    pub fn from_gram(family: &GramFamily, s_max: usize) -> Result<Self> {
        family.check_coverage(s_max)?;
        let blocks = (0..=s_max)
            .map(|s| {
                CMatrix::from_fn(s + 1, s + 1, |n, m| {
                    family
                        .inner((n, s - n), (m, s - m))
                        .expect("coverage checked above")
                })
            })
            .collect();
        Ok(Self { blocks })
    }

    /// Shift-covariant tensor route: the unrestricted Gram tensor
    /// `<psi_{n,k} | psi_{m,l}>` followed by the selection rule
    /// `n - m = l - k`.
    ///
    /// The restriction is exactly the sector-block storage, so this equals
    /// [`DiffKernel::from_gram`]; it exists to document the pushforward
    /// construction and is tested for equality against the direct route.
    pub fn from_theta_covariant(family: &GramFamily, s_max: usize) -> Result<Self> {
        Self::from_gram(family, s_max)
    }

    /// Explicit blocks; shapes are checked, structural validity is not
    /// (run [`DiffKernel::validate`]).
    pub fn from_blocks(blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::ValidationFailed(
                "kernel needs at least the sector-0 block".into(),
            ));
        }
        for (s, block) in blocks.iter().enumerate() {
            if block.nrows() != s + 1 || block.ncols() != s + 1 {
                return Err(Error::ValidationFailed(format!(
                    "sector {s} block is {}x{}, expected {}x{}",
                    block.nrows(),
                    block.ncols(),
                    s + 1,
                    s + 1
                )));
            }
        }
        Ok(Self { blocks })
    }

    /// The non-factorizable four-phase example: every Gram vector is the
    /// same unit vector except four labels carrying extra phases
    /// `(theta1..theta4)` at `(0,2), (2,2), (0,4), (2,4)`.
    pub fn four_phase_example(thetas: [f64; 4], s_max: usize) -> Result<Self> {
        if s_max < 6 {
            return Err(Error::DimensionTooSmall {
                dim: s_max,
                needed: 6,
                context: "four-phase example (label (2,4) sits in sector 6)",
            });
        }
        let phase = |t: f64| CVector::from_vec(vec![C64::from_polar(1.0, t)]);
        let family = GramFamily::from_fn(s_max, |n, k| match (n, k) {
            (0, 2) => phase(thetas[0]),
            (2, 2) => phase(thetas[1]),
            (0, 4) => phase(thetas[2]),
            (2, 4) => phase(thetas[3]),
            _ => phase(0.0),
        });
        Self::from_gram(&family, s_max)
    }

    pub fn s_max(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, s: usize) -> &CMatrix {
        &self.blocks[s]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// Tensor entry `c[n, m, s-n, s-m]`; zero across sectors or outside.
    pub fn entry(&self, (n, k): (usize, usize), (m, l): (usize, usize)) -> C64 {
        if n + k != m + l || n + k > self.s_max() {
            return C64::new(0.0, 0.0);
        }
        self.blocks[n + k][(n, m)]
    }

    /// Per-sector structure report: Hermiticity, unit diagonal, positivity.
    pub fn validate(&self, tol: Option<f64>) -> DiffValidation {
        let tol = tol.unwrap_or(tolerance::VALIDATION);
        let blocks: Vec<BlockCheck> = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(s, block)| {
                let herm = hermiticity_residual(block);
                let diag_dev = (0..block.nrows())
                    .map(|n| (block[(n, n)] - C64::new(1.0, 0.0)).norm())
                    .fold(0.0f64, f64::max);
                let min_eig = hermitian_eigenvalues_of(block)
                    .map(|e| e.first().copied().unwrap_or(0.0))
                    .unwrap_or(f64::NEG_INFINITY);
                BlockCheck {
                    sector: s,
                    hermiticity_residual: herm,
                    max_diag_deviation: diag_dev,
                    min_eigenvalue: min_eig,
                }
            })
            .collect();
        let first_violation = blocks.iter().find_map(|b| {
            if b.hermiticity_residual > tol {
                Some(format!(
                    "sector {}: Hermiticity residual {:.3e}",
                    b.sector, b.hermiticity_residual
                ))
            } else if b.max_diag_deviation > tol {
                Some(format!(
                    "sector {}: diagonal deviation {:.3e}",
                    b.sector, b.max_diag_deviation
                ))
            } else if b.min_eigenvalue < -tol {
                Some(format!(
                    "sector {}: negative eigenvalue {:.3e}",
                    b.sector, b.min_eigenvalue
                ))
            } else {
                None
            }
        });
        DiffValidation {
            pass: first_violation.is_none(),
            tolerance: tol,
            blocks,
            first_violation,
        }
    }
}

/// Result of [`DiffKernel::validate`].
#[derive(Clone, Debug)]
pub struct DiffValidation {
    pub blocks: Vec<BlockCheck>,
    pub tolerance: f64,
    pub pass: bool,
    pub first_violation: Option<String>,
}

/// Structure measurements for one sector block.
#[derive(Clone, Copy, Debug)]
pub struct BlockCheck {
    pub sector: usize,
    pub min_eigenvalue: f64,
    pub max_diag_deviation: f64,
    pub hermiticity_residual: f64,
}

/// Unit vectors indexed by two-mode labels, the Gram data behind a kernel.
///
/// Vectors may live in spaces of different dimensions; inner products embed
/// the shorter vector by zero padding. Only same-sector inner products ever
/// reach a kernel.
#[derive(Clone, Debug)]
pub struct GramFamily {
    s_max: usize,
    vectors: HashMap<(usize, usize), CVector>,
}

impl GramFamily {
    pub fn new(
        s_max: usize,
        items: impl IntoIterator<Item = ((usize, usize), CVector)>,
    ) -> Self {
        Self {
            s_max,
            vectors: items.into_iter().collect(),
        }
    }

    /// Fills every label `n + k <= s_max` from a closure.
    pub fn from_fn(s_max: usize, f: impl Fn(usize, usize) -> CVector) -> Self {
        let mut vectors = HashMap::new();
        for s in 0..=s_max {
            for n in 0..=s {
                vectors.insert((n, s - n), f(n, s - n));
            }
        }
        Self { s_max, vectors }
    }

    /// Every label mapped to the same vector.
    pub fn constant(s_max: usize, v: CVector) -> Self {
        Self::from_fn(s_max, |_, _| v.clone())
    }

    /// Product family `psi_{n,k} = phi1_n (x) phi2_k`.
    pub fn product(phis1: &[CVector], phis2: &[CVector], s_max: usize) -> Result<Self> {
        for (phis, context) in [
            (phis1, "first-mode vector list"),
            (phis2, "second-mode vector list"),
        ] {
            if phis.len() < s_max + 1 {
                return Err(Error::DimensionTooSmall {
                    dim: phis.len(),
                    needed: s_max + 1,
                    context,
                });
            }
        }
        Ok(Self::from_fn(s_max, |n, k| phis1[n].kronecker(&phis2[k])))
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn vector(&self, n: usize, k: usize) -> Option<&CVector> {
        self.vectors.get(&(n, k))
    }

    /// `<xi_{n,k} | xi_{m,l}>` with zero-padding to the longer vector.
    pub fn inner(&self, a: (usize, usize), b: (usize, usize)) -> Result<C64> {
        let x = self
            .vectors
            .get(&a)
            .ok_or(Error::MissingLabel { n: a.0, k: a.1 })?;
        let y = self
            .vectors
            .get(&b)
            .ok_or(Error::MissingLabel { n: b.0, k: b.1 })?;
        let len = x.len().min(y.len());
        let mut sum = C64::new(0.0, 0.0);
        for i in 0..len {
            sum += x[i].conj() * y[i];
        }
        Ok(sum)
    }

    /// Errors unless every label `n + k <= s_max` has a unit vector.
    pub fn check_coverage(&self, s_max: usize) -> Result<()> {
        for s in 0..=s_max {
            for n in 0..=s {
                let k = s - n;
                let v = self
                    .vectors
                    .get(&(n, k))
                    .ok_or(Error::MissingLabel { n, k })?;
                let norm = v.norm();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(Error::NonUnitVector { n, k, norm });
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the factorization decision.
#[derive(Clone, Debug)]
pub enum FactorizationResult {
    /// A pair of single-mode kernels reproducing every block.
    Factorized {
        c1: PhaseKernel,
        c2: PhaseKernel,
        residual: f64,
    },
    /// A concrete cross-ratio violation; no pair can exist.
    NotFactorizable { witness: FactorizationWitness },
    /// The necessary test passed but a constructive split was not
    /// established (zero pivots or candidate validation failure).
    Indeterminate { reason: String },
}

/// Cross-ratio mismatch at difference order `q`: the tensor entries at
/// labels `((n+q, k), (n, k+q))` are inconsistent with a product form.
#[derive(Clone, Copy, Debug)]
pub struct FactorizationWitness {
    pub order: usize,
    pub n: usize,
    pub k: usize,
    pub mismatch: f64,
}

impl fmt::Display for FactorizationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (q, n, k) = (self.order, self.n, self.k);
        write!(
            f,
            "order {q}: entries at labels (({},{k}),({n},{})) break the rank-one \
             relation M[n,k]*M[0,0] = M[n,0]*M[0,k] by {:.3e}",
            n + q,
            k + q,
            self.mismatch
        )
    }
}

/// Observable value `E(X)` as a block-diagonal two-mode operator.
pub fn eval_diff(kernel: &DiffKernel, x: &IntervalSet) -> TwoModeOperator {
    let s_max = kernel.s_max();
    let cutoff = Cutoff::Total(s_max);
    let weights = weight_table(s_max, x);
    let mut matrix = CMatrix::zeros(cutoff.dim(), cutoff.dim());
    for s in 0..=s_max {
        let base = s * (s + 1) / 2;
        let block = kernel.block(s);
        for n in 0..=s {
            for m in 0..=s {
                matrix[(base + n, base + m)] =
                    block[(n, m)] * weights[(s_max + n) - m];
            }
        }
    }
    TwoModeOperator::new_unchecked(cutoff, matrix, true)
}

/// Fourier weights for `q = -s_max ..= s_max`; index `q + s_max`.
fn weight_table(s_max: usize, x: &IntervalSet) -> Vec<C64> {
    (-(s_max as i64)..=s_max as i64)
        .map(|q| fourier_weight(q, x))
        .collect()
}

/// Largest entry modulus, the max-norm used by residual reports.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Covariance residuals of `E` under the number-shift unitaries.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceReport {
    /// Max-norm of `Theta(alpha,beta) E(X) Theta* - E(X + (alpha-beta))`.
    pub theta_residual: f64,
    /// Same with `alpha = beta` and no shift: invariance under equal shifts.
    pub invariance_residual: f64,
    /// Difference-shift unitary against a `2 beta` translation (the correct
    /// exponent: both modes contribute).
    pub factor2_residual: f64,
    /// Difference-shift unitary against a `beta` translation; stays bounded
    /// away from zero for generic kernels and witnesses the factor of two.
    pub factor1_residual: f64,
}

/// Full covariance diagnostics at one `(alpha, beta, X)` triple.
pub fn covariance_report(
    kernel: &DiffKernel,
    alpha: f64,
    beta: f64,
    x: &IntervalSet,
) -> CovarianceReport {
    let cutoff = Cutoff::Total(kernel.s_max());
    let e = eval_diff(kernel, x);
    let labels = cutoff.labels();

    // Theta(a, b) is diagonal, so conjugation is an entrywise phase
    // e^{i a (n - m) + i b (k - l)}; no matrix products needed.
    let conjugated = |a: f64, b: f64| -> CMatrix {
        CMatrix::from_fn(e.matrix().nrows(), e.matrix().ncols(), |i, j| {
            let (n, k) = labels[i];
            let (m, l) = labels[j];
            let angle = a * (n as f64 - m as f64) + b * (k as f64 - l as f64);
            e.matrix()[(i, j)] * C64::from_polar(1.0, angle)
        })
    };

    let theta_residual = max_abs(&(conjugated(alpha, beta)
        - eval_diff(kernel, &x.shift(alpha - beta)).matrix()));
    let invariance_residual = max_abs(&(conjugated(alpha, alpha) - e.matrix()));
    let v_delta = conjugated(beta, -beta);
    let factor2_residual =
        max_abs(&(&v_delta - eval_diff(kernel, &x.shift(2.0 * beta)).matrix()));
    let factor1_residual = max_abs(&(&v_delta - eval_diff(kernel, &x.shift(beta)).matrix()));

    CovarianceReport {
        theta_residual,
        invariance_residual,
        factor2_residual,
        factor1_residual,
    }
}

/// Max-norm of the defining covariance identity at `(alpha, beta, X)`.
pub fn covariance_residual(kernel: &DiffKernel, alpha: f64, beta: f64, x: &IntervalSet) -> f64 {
    covariance_report(kernel, alpha, beta, x).theta_residual
}

/// Extracts unit Gram vectors reproducing the kernel.
///
/// Each block is eigen-factorized; eigenvalues in `[-1e-10, 0)` are clamped
/// to zero, more negative ones abort. The vectors from different sectors
/// are embedded into disjoint coordinate slots of a common space, so
/// cross-sector inner products vanish and only the sector blocks matter,
/// mirroring the tagging of each vector by its total occupation.
pub fn gram_from_kernel(kernel: &DiffKernel) -> Result<GramFamily> {
    let s_max = kernel.s_max();
    let ambient: usize = (s_max + 2) * (s_max + 1) / 2;
    let mut items = Vec::new();
    let mut offset = 0usize;
    for s in 0..=s_max {
        let block = kernel.block(s);
        let herm = hermiticity_residual(block);
        if herm > tolerance::VALIDATION {
            return Err(Error::ValidationFailed(format!(
                "sector {s}: Hermiticity residual {herm:.3e}"
            )));
        }
        let (values, vectors) = hermitian_eigendecomposition(block)?;
        let mut roots = Vec::with_capacity(values.len());
        for &v in &values {
            if v < -tolerance::GRAM_CLAMP {
                return Err(Error::ValidationFailed(format!(
                    "sector {s}: eigenvalue {v:.3e} below the clamp floor"
                )));
            }
            roots.push(v.max(0.0).sqrt());
        }
        // Column n of sqrt(Lambda) V* is the vector for label (n, s-n).
        for n in 0..=s {
            let mut xi = CVector::zeros(ambient);
            for i in 0..=s {
                xi[offset + i] = vectors[(n, i)].conj() * roots[i];
            }
            items.push(((n, s - n), xi));
        }
        offset += s + 1;
    }
    Ok(GramFamily::new(s_max, items))
}

/// Decides whether the kernel is a difference of two single-mode
/// observables.
///
/// Stage 1 applies the rank-one cross-ratio test per difference order `q`:
/// the entries `M^q[n, k] = C^{n+q+k}[n+q, n]` of a product kernel form a
/// rank-one array in `(n, k)`, so whenever all entries are nonzero,
/// `M[n,k] M[0,0] = M[n,0] M[0,k]` must hold; a violation is returned as a
/// witness. Stage 2 extracts candidate single-mode kernels from the pivot
/// row and column. The data fixes each band only up to a positive scalar
/// (band phases are fixed by `t_q > 0` real; pairs are non-unique), and a
/// scalar that suits one true pair can push another outside the positive
/// cone, so extraction tries a short deterministic gauge ladder and returns
/// the first pair that validates and reproduces every block. Zero pivots or
/// failure of every gauge yield `Indeterminate`, never a guess.
pub fn factorize(kernel: &DiffKernel, tol: f64) -> Result<FactorizationResult> {
    let report = kernel.validate(None);
    if !report.pass {
        return Err(Error::ValidationFailed(
            report
                .first_violation
                .unwrap_or_else(|| "kernel failed validation".into()),
        ));
    }
    let s_max = kernel.s_max();
    if s_max == 0 {
        return Ok(FactorizationResult::Factorized {
            c1: PhaseKernel::canonical(0),
            c2: PhaseKernel::canonical(0),
            residual: 0.0,
        });
    }

    // M^q[n, k] lives on the triangle n + k <= s_max - q.
    let m_entry = |q: usize, n: usize, k: usize| kernel.block(n + q + k)[(n + q, n)];

    // Stage 1: rank-one necessity.
    for q in 1..=s_max {
        let reach = s_max - q;
        let all_nonzero = (0..=reach).all(|n| {
            (0..=reach - n).all(|k| m_entry(q, n, k).norm() > tol)
        });
        if !all_nonzero {
            continue;
        }
        for n in 1..=reach {
            for k in 1..=(reach - n) {
                let lhs = m_entry(q, n, k) * m_entry(q, 0, 0);
                let rhs = m_entry(q, n, 0) * m_entry(q, 0, k);
                let mismatch = (lhs - rhs).norm();
                if mismatch > tol {
                    return Ok(FactorizationResult::NotFactorizable {
                        witness: FactorizationWitness {
                            order: q,
                            n,
                            k,
                            mismatch,
                        },
                    });
                }
            }
        }
    }

    // Stage 2: generic extraction. Gather the pivot row and column per
    // difference order once; every gauge reuses them.
    let dim = s_max + 1;
    let mut bands: Vec<(usize, Vec<C64>, Vec<C64>, C64)> = Vec::with_capacity(s_max);
    for q in 1..=s_max {
        let reach = s_max - q;
        let pivot = m_entry(q, 0, 0);
        if pivot.norm() <= tol {
            return Ok(FactorizationResult::Indeterminate {
                reason: format!(
                    "zero pivot at difference order {q}: entry at labels \
                     (({q},0),(0,{q})) has modulus {:.3e}",
                    pivot.norm()
                ),
            });
        }
        let row = (0..=reach).map(|n| m_entry(q, n, 0)).collect();
        let col = (0..=reach).map(|k| m_entry(q, 0, k)).collect();
        bands.push((q, row, col, pivot));
    }
    let max_norm = |v: &[C64]| v.iter().map(|z| z.norm()).fold(0.0f64, f64::max);

    // Candidate bands are `c1[n+q, n] = M^q[n, 0] t_q` and
    // `c2[k, k+q] = M^q[0, k] / (pivot_q t_q)`; the product reproduces the
    // blocks for any t_q > 0, so only candidate validity depends on the
    // gauge. Balancing the band maxima suits factors of comparable spread,
    // while a rank-deficient factor (all band maxima at modulus one) leaves
    // no positivity margin and needs its own side pinned exactly.
    let gauges: [(&str, fn(f64, f64, f64) -> f64); 3] = [
        ("modulus-balancing", |p, mr, mc| (mc / (p * mr)).sqrt()),
        ("second-factor-peak", |p, _, mc| mc / p),
        ("first-factor-peak", |_, mr, _| 1.0 / mr),
    ];

    let mut first_failure: Option<String> = None;
    for (label, scale) in gauges {
        let mut m1 = CMatrix::identity(dim, dim);
        let mut m2 = CMatrix::identity(dim, dim);
        for (q, row, col, pivot) in &bands {
            let t = scale(pivot.norm(), max_norm(row), max_norm(col));
            for (n, r) in row.iter().enumerate() {
                let v = r * t;
                m1[(n + q, n)] = v;
                m1[(n, n + q)] = v.conj();
            }
            for (k, c) in col.iter().enumerate() {
                let v = c / (pivot * t);
                m2[(k, k + q)] = v;
                m2[(k + q, k)] = v.conj();
            }
        }
        let pair = PhaseKernel::from_matrix_with_tol(m1, tol).and_then(|k1| {
            PhaseKernel::from_matrix_with_tol(m2, tol).map(|k2| (k1, k2))
        });
        let (c1, c2) = match pair {
            Ok(p) => p,
            Err(e) => {
                first_failure.get_or_insert_with(|| format!("{label} gauge: {e}"));
                continue;
            }
        };
        let mut residual = 0.0f64;
        for s in 0..=s_max {
            let block = kernel.block(s);
            for n in 0..=s {
                for m in 0..=s {
                    let dev =
                        (block[(n, m)] - c1.entry(n, m) * c2.entry(s - n, s - m)).norm();
                    residual = residual.max(dev);
                }
            }
        }
        if residual <= tol {
            return Ok(FactorizationResult::Factorized { c1, c2, residual });
        }
        first_failure.get_or_insert_with(|| {
            format!(
                "{label} gauge: candidate pair misses the blocks by \
                 {residual:.3e} (tolerance {tol:.1e})"
            )
        });
    }
    Ok(FactorizationResult::Indeterminate {
        reason: first_failure
            .unwrap_or_else(|| "no gauge produced a valid candidate pair".into()),
    })
}

/// Measurement probability `tr(state E(X))`, computed sector by sector.
pub fn prob(kernel: &DiffKernel, state: &TwoModeState, x: &IntervalSet) -> Result<f64> {
    let state_reach = state.cutoff().max_total();
    if state_reach > kernel.s_max() {
        return Err(Error::CutoffMismatch(format!(
            "state reaches sector {state_reach}, kernel stops at {}",
            kernel.s_max()
        )));
    }
    let weights = weight_table(kernel.s_max(), x);
    let s_max = kernel.s_max();
    let mut p = C64::new(0.0, 0.0);
    for s in 0..=state_reach.min(s_max) {
        let block = kernel.block(s);
        for n in 0..=s {
            for m in 0..=s {
                let t = state.entry((m, s - m), (n, s - n));
                if t != C64::new(0.0, 0.0) {
                    p += block[(n, m)] * weights[(s_max + n) - m] * t;
                }
            }
        }
    }
    if p.im.abs() > 1e-10 {
        return Err(Error::ValidationFailed(format!(
            "probability has imaginary residual {:.3e}",
            p.im
        )));
    }
    Ok(p.re)
}

/// Probability `<v| E(X) |v>` for a pure two-mode vector, without forming
/// the state matrix; scales to the large cutoffs of amplitude scans.
pub fn prob_pure(kernel: &DiffKernel, v: &TwoModeVector, x: &IntervalSet) -> Result<f64> {
    let state_reach = v.cutoff().max_total();
    if state_reach > kernel.s_max() {
        return Err(Error::CutoffMismatch(format!(
            "vector reaches sector {state_reach}, kernel stops at {}",
            kernel.s_max()
        )));
    }
    let s_max = kernel.s_max();
    let weights = weight_table(s_max, x);
    let mut p = C64::new(0.0, 0.0);
    for s in 0..=state_reach {
        let block = kernel.block(s);
        for n in 0..=s {
            let vn = v.coeff(n, s - n);
            if vn == C64::new(0.0, 0.0) {
                continue;
            }
            for m in 0..=s {
                let vm = v.coeff(m, s - m);
                if vm == C64::new(0.0, 0.0) {
                    continue;
                }
                p += vn.conj() * block[(n, m)] * weights[(s_max + n) - m] * vm;
            }
        }
    }
    if p.im.abs() > 1e-10 {
        return Err(Error::ValidationFailed(format!(
            "probability has imaginary residual {:.3e}",
            p.im
        )));
    }
    Ok(p.re)
}

/// The fixed-reference-phase observable `E_1(X + alpha) (x) I`.
pub fn fixed_phase_diff(
    c1: &PhaseKernel,
    alpha: FixedPhase,
    x: &IntervalSet,
    cutoff: Cutoff,
) -> Result<TwoModeOperator> {
    let needed = cutoff.max_per_mode() + 1;
    if c1.dim() < needed {
        return Err(Error::DimensionTooSmall {
            dim: c1.dim(),
            needed,
            context: "first-mode kernel under the chosen cutoff",
        });
    }
    let e1 = eval_phase(c1, &x.shift(alpha.alpha()));
    let labels = cutoff.labels();
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (i, &(n, k)) in labels.iter().enumerate() {
        for (j, &(m, l)) in labels.iter().enumerate() {
            if k == l {
                matrix[(i, j)] = e1[(n, m)];
            }
        }
    }
    TwoModeOperator::new(cutoff, matrix, false)
}
