//! Phase-difference densities, the Barnett-Pegg product distribution, and
//! moment operators with first-moment reconstruction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::{hermiticity_residual, C64, CMatrix, Cutoff, TwoModeOperator, TwoModeState};
use crate::phase1::{fourier_weight, IntervalSet};
use crate::phasediff::{DiffKernel, GramFamily};
use crate::tolerance;

/// Boundary function `phi(x) = sum_n phihat_n e^{-inx}` stored by its
/// coefficients. The negative exponent is the convention under which the
/// canonical phase density of a single-mode vector is `|phi(theta)|^2/2pi`:
/// the observable pairs `conj(phihat_n)` with `e^{intheta}`.
#[derive(Clone, Debug)]
pub struct FourierFunction {
    coefficients: Vec<C64>,
}

impl FourierFunction {
    pub fn new(coefficients: Vec<C64>) -> Self {
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| c * C64::from_polar(1.0, -(n as f64) * x))
            .sum()
    }
}

/// Fourier coefficients of `|phi(x)|^2`: index `i` holds the coefficient of
/// `e^{i(i - n_max)x}`, the autocorrelation `sum_n phihat_n conj(phihat_{n+d})`.
fn autocorrelation(coeffs: &[C64]) -> Vec<C64> {
    let n_max = coeffs.len().saturating_sub(1);
    let mut out = vec![C64::new(0.0, 0.0); 2 * n_max + 1];
    for (n, a) in coeffs.iter().enumerate() {
        for (m, b) in coeffs.iter().enumerate() {
            out[n_max + m - n] += a * b.conj();
        }
    }
    out
}

/// Probability that the canonical phase difference of the product state
/// `phi (x) psi` lands in `x`, evaluated through boundary functions: the
/// inner full-circle integral of `|phi(x+theta)|^2 |psi(x)|^2` reduces to a
/// convolution of autocorrelations (both are trigonometric polynomials), and
/// the outer integral over `x` uses closed-form Fourier weights.
pub fn barnett_pegg_prob(
    phi: &FourierFunction,
    psi: &FourierFunction,
    x: &IntervalSet,
) -> Result<f64> {
    for f in [phi, psi] {
        let norm_sqr = f.norm_sqr();
        if (norm_sqr - 1.0).abs() > tolerance::VALIDATION {
            return Err(Error::NonUnitNorm { norm_sqr });
        }
    }
    let a = autocorrelation(phi.coefficients());
    let b = autocorrelation(psi.coefficients());
    let na = (a.len() - 1) / 2;
    let nb = (b.len() - 1) / 2;
    let reach = na.min(nb) as i64;
    // p = sum_d a_d b_{-d} nu_d(X); conjugate symmetry of autocorrelations
    // makes the sum real.
    let mut p = C64::new(0.0, 0.0);
    for d in -reach..=reach {
        let ad = a[(na as i64 + d) as usize];
        let bd = b[(nb as i64 - d) as usize];
        p += ad * bd * fourier_weight(d, x);
    }
    debug_assert!(p.im.abs() < 1e-12);
    Ok(p.re)
}

/// Density of the phase-difference distribution at `theta`,
/// `g(theta) = sum_s sum_{n,m} C^s[n,m] e^{i(n-m)theta} <m,s-m|T|n,s-n>`.
///
/// The value is the trace against a positive operator whenever the inputs
/// are valid, so it is real and nonnegative up to rounding; the imaginary
/// part is checked, slight negativity is left to callers to flag.
pub fn density_diff(kernel: &DiffKernel, state: &TwoModeState, theta: f64) -> Result<f64> {
    let reach = state.cutoff().max_total();
    if reach > kernel.s_max() {
        return Err(Error::CutoffMismatch(format!(
            "state reaches sector {reach}, kernel stops at {}",
            kernel.s_max()
        )));
    }
    let mut sum = C64::new(0.0, 0.0);
    for s in 0..=reach {
        let block = kernel.block(s);
        for n in 0..=s {
            for m in 0..=s {
                let t = state.entry((m, s - m), (n, s - n));
                if t == C64::new(0.0, 0.0) {
                    continue;
                }
                let phase = C64::from_polar(1.0, (n as f64 - m as f64) * theta);
                sum += block[(n, m)] * phase * t;
            }
        }
    }
    if sum.im.abs() > tolerance::VALIDATION {
        return Err(Error::ValidationFailed(format!(
            "density has imaginary residual {:.3e} at theta {theta}",
            sum.im.abs()
        )));
    }
    Ok(sum.re)
}

/// Density of the joint two-phase distribution at `(x, y)`,
/// `gt(x,y) = sum <xi_{n,k}|xi_{m,l}> e^{i(n-m)x + i(k-l)y} <m,l|T|n,k>`,
/// using the full Gram data including cross-sector inner products.
pub fn density_tilde(
    family: &GramFamily,
    state: &TwoModeState,
    x: f64,
    y: f64,
) -> Result<f64> {
    let reach = state.cutoff().max_total();
    if reach > family.s_max() {
        return Err(Error::CutoffMismatch(format!(
            "state reaches sector {reach}, family stops at {}",
            family.s_max()
        )));
    }
    let labels = state.cutoff().labels();
    let mut sum = C64::new(0.0, 0.0);
    for &(n, k) in &labels {
        for &(m, l) in &labels {
            let t = state.entry((m, l), (n, k));
            if t == C64::new(0.0, 0.0) {
                continue;
            }
            let c = family.inner((n, k), (m, l))?;
            let angle = (n as f64 - m as f64) * x + (k as f64 - l as f64) * y;
            sum += c * C64::from_polar(1.0, angle) * t;
        }
    }
    if sum.im.abs() > tolerance::VALIDATION {
        return Err(Error::ValidationFailed(format!(
            "joint density has imaginary residual {:.3e} at ({x}, {y})",
            sum.im.abs()
        )));
    }
    Ok(sum.re)
}

/// First moment operator `E^(1) = int theta dE`: diagonal entries `pi`,
/// off-diagonal entries `C^s[n,m] i/(m-n)` within each sector.
pub fn first_moment(kernel: &DiffKernel) -> TwoModeOperator {
    let s_max = kernel.s_max();
    let cutoff = Cutoff::Total(s_max);
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for s in 0..=s_max {
        let block = kernel.block(s);
        for n in 0..=s {
            let i = cutoff.index_of(n, s - n).expect("sector label within cutoff");
            for m in 0..=s {
                let j = cutoff.index_of(m, s - m).expect("sector label within cutoff");
                matrix[(i, j)] = if n == m {
                    C64::new(PI, 0.0)
                } else {
                    block[(n, m)] * C64::new(0.0, 1.0) / (m as f64 - n as f64)
                };
            }
        }
    }
    TwoModeOperator::new_unchecked(cutoff, matrix, true)
}

/// Inverts [`first_moment`]: the kernel is read back entrywise as
/// `C^s[n,m] = (m-n)/i * <n,s-n|M|m,s-m>` for `n != m`, with unit diagonal.
pub fn reconstruct_from_first_moment(moment: &TwoModeOperator) -> Result<DiffKernel> {
    let cutoff = moment.cutoff();
    let s_max = match cutoff {
        Cutoff::Total(s) => s,
        Cutoff::PerMode(_) => {
            return Err(Error::MalformedMoment(
                "first moments live on a total-number cutoff".into(),
            ));
        }
    };
    let herm = hermiticity_residual(moment.matrix());
    if herm > tolerance::VALIDATION {
        return Err(Error::MalformedMoment(format!(
            "hermiticity residual {herm:.3e}"
        )));
    }
    let labels = cutoff.labels();
    for (i, &(n, k)) in labels.iter().enumerate() {
        for (j, &(m, l)) in labels.iter().enumerate() {
            let v = moment.matrix()[(i, j)];
            if n + k != m + l {
                if v.norm() > 1e-12 {
                    return Err(Error::MalformedMoment(format!(
                        "entry (({n},{k}),({m},{l})) has modulus {:.3e} outside \
                         the total-number blocks",
                        v.norm()
                    )));
                }
            } else if i == j && (v - C64::new(PI, 0.0)).norm() > 1e-10 {
                return Err(Error::MalformedMoment(format!(
                    "diagonal at ({n},{k}) deviates from pi by {:.3e}",
                    (v - C64::new(PI, 0.0)).norm()
                )));
            }
        }
    }
    let mut blocks = Vec::with_capacity(s_max + 1);
    for s in 0..=s_max {
        let mut block = CMatrix::identity(s + 1, s + 1);
        for n in 0..=s {
            for m in 0..=s {
                if n != m {
                    let v = moment.entry((n, s - n), (m, s - m));
                    block[(n, m)] = v * C64::new(0.0, -(m as f64 - n as f64));
                }
            }
        }
        blocks.push(block);
    }
    DiffKernel::from_blocks(blocks)
}

/// Cyclic moment `C^(r) = int e^{ir theta} dE`, the sector-preserving
/// lowering of the number difference by `2r`: the only nonzero entries sit
/// at row `(n, l+r)`, column `(n+r, l)` and equal `C^{n+l+r}[n, n+r]`.
pub fn cyclic_moment(kernel: &DiffKernel, r: usize) -> TwoModeOperator {
    assert!(r >= 1, "cyclic moments are defined for r >= 1");
    let s_max = kernel.s_max();
    let cutoff = Cutoff::Total(s_max);
    let dim = cutoff.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for s in r..=s_max {
        let block = kernel.block(s);
        for n in 0..=s - r {
            let l = s - r - n;
            let i = cutoff.index_of(n, l + r).expect("sector label within cutoff");
            let j = cutoff.index_of(n + r, l).expect("sector label within cutoff");
            matrix[(i, j)] = block[(n, n + r)];
        }
    }
    TwoModeOperator::new_unchecked(cutoff, matrix, true)
}
