//! Classical-limit numerics: convergence of two-mode coherent statistics to
//! shifted single-mode statistics, and double-limit Dirac concentration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{C64, Cutoff, FockVector, TwoModeVector};
use crate::phase1::{fourier_weight, FixedPhase, IntervalSet, PhaseKernel};
use crate::phasediff::{prob_pure, DiffKernel};
use crate::tolerance;

/// Per-mode cutoff that keeps the Poisson tail of a coherent vector below
/// 1e-8 for amplitudes up to 8: six standard deviations past the mean plus
/// slack for small amplitudes.
pub fn required_cutoff(amplitude: f64) -> usize {
    (amplitude * amplitude + 6.0 * amplitude + 10.0).ceil() as usize
}

/// Knobs for the amplitude scans.
#[derive(Clone, Copy, Debug)]
pub struct ScanConfig {
    /// Number of equispaced partition cells for the total-variation distance.
    pub cells: usize,
    /// Refuse amplitudes whose tail rule would exceed this per-mode cutoff.
    pub max_per_mode_cutoff: usize,
    /// Maximum tolerated truncated mass per coherent vector.
    pub tail_limit: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            cells: 16,
            max_per_mode_cutoff: tolerance::CUTOFF_BUDGET,
            tail_limit: tolerance::COHERENT_TAIL,
        }
    }
}

/// What sits on the second mode during a classical scan.
#[derive(Clone, Debug)]
pub enum SecondMode {
    /// A genuine single-mode phase kernel; the scan drives its coherent
    /// amplitude through the schedule.
    Kernel(PhaseKernel),
    /// The trivial observable of a fixed phase value: the difference
    /// observable collapses to a shifted first-mode observable tensor the
    /// identity, with no second-mode amplitude dependence at all.
    Fixed(FixedPhase),
}

/// Outcome of [`classical_scan`].
#[derive(Clone, Debug)]
pub struct LimitScanReport {
    pub amplitudes: Vec<f64>,
    pub distances: Vec<f64>,
    /// Shift applied to the single-mode reference statistics.
    pub shift_used: f64,
}

/// Difference of the two sides of the coherent-state covariance identity
/// `<z1 e^{ia}, z2 e^{ib}|E(X)|..> = <z1, z2|E(X + (b-a))|z1, z2>`.
///
/// Rotating the state by `Theta(a, b)` conjugates the observable by
/// `Theta(a, b)*`, which shifts the window the opposite way to conjugation
/// by `Theta(a, b)`; hence the shift is `b - a` here while the operator
/// identity reads `Theta(a, b) E(X) Theta(a, b)* = E(X + (a-b))`.
///
/// Phase rotation of a truncated coherent vector is exact (it rotates each
/// coefficient), so the difference measures kernel covariance, not
/// truncation; the tail precondition keeps the statistics physically
/// meaningful.
pub fn coherent_covariance_check(
    kernel: &DiffKernel,
    z1: C64,
    z2: C64,
    alpha: f64,
    beta: f64,
    x: &IntervalSet,
) -> Result<f64> {
    let cutoff = Cutoff::Total(kernel.s_max());
    let v = TwoModeVector::coherent(z1, z2, cutoff);
    let tail = (1.0 - v.norm_sqr()).max(0.0);
    if tail > tolerance::COHERENT_TAIL {
        return Err(Error::TailTooLarge {
            amplitude: z1.norm().max(z2.norm()),
            tail,
            limit: tolerance::COHERENT_TAIL,
        });
    }
    let rotated = TwoModeVector::coherent(
        z1 * C64::from_polar(1.0, alpha),
        z2 * C64::from_polar(1.0, beta),
        cutoff,
    );
    let lhs = prob_pure(kernel, &rotated, x)?;
    let rhs = prob_pure(kernel, &v, &x.shift(beta - alpha))?;
    Ok((lhs - rhs).abs())
}

/// Total-variation scan of two-mode coherent statistics against the shifted
/// single-mode reference as the second-mode amplitude grows.
///
/// The caller supplies `alpha`, the asymptotic phase of the second-mode
/// kernel's lower bands, `c[n+k, n] -> e^{ik alpha}` (0 for the canonical
/// and coherent-vacuum kernels); the reference is shifted by
/// `arg_z2 - alpha`. With a fixed-phase second mode the
/// difference observable is the first-mode observable shifted by the fixed
/// phase tensor the identity, which the scan evaluates verbatim on both
/// sides, so those distances vanish identically and carry no amplitude
/// dependence.
pub fn classical_scan(
    c1: &PhaseKernel,
    second: &SecondMode,
    z1: C64,
    arg_z2: f64,
    amp_schedule: &[f64],
    alpha: f64,
    config: &ScanConfig,
) -> Result<LimitScanReport> {
    check_schedule(amp_schedule)?;
    if config.cells == 0 {
        return Err(Error::ValidationFailed(
            "the partition needs at least one cell".into(),
        ));
    }
    let shift_used = match second {
        SecondMode::Kernel(_) => arg_z2 - alpha,
        SecondMode::Fixed(f) => f.alpha(),
    };
    let n1 = checked_cutoff(z1.norm(), config)?;
    require_dim(c1, n1, "first-mode kernel")?;
    let w1 = coherent_checked(z1, n1, config)?;
    let r1 = mode_correlations(c1, &w1.coefficients);
    let cells = partition(config.cells);
    // nu_q per cell, q = 0..=n1; shifts enter through the exact identity
    // nu_q(X + t) = e^{iqt} nu_q(X).
    let weights: Vec<Vec<C64>> = cells
        .iter()
        .map(|cell| (0..=n1).map(|q| fourier_weight(q as i64, cell)).collect())
        .collect();

    let single = |cell_weights: &[C64], shift: f64| -> f64 {
        let mut p = (cell_weights[0] * r1[0]).re;
        for q in 1..r1.len() {
            let rot = C64::from_polar(1.0, q as f64 * shift);
            p += 2.0 * (cell_weights[q] * rot * r1[q]).re;
        }
        p
    };

    let distances: Vec<Result<f64>> = amp_schedule
        .par_iter()
        .map(|&amp| -> Result<f64> {
            let mut distance = 0.0;
            match second {
                SecondMode::Fixed(f) => {
                    for cw in &weights {
                        let two_mode = single(cw, f.alpha());
                        let reference = single(cw, shift_used);
                        distance += 0.5 * (two_mode - reference).abs();
                    }
                }
                SecondMode::Kernel(c2) => {
                    let n2 = checked_cutoff(amp, config)?;
                    require_dim(c2, n2, "second-mode kernel")?;
                    let w2 =
                        coherent_checked(C64::from_polar(amp, arg_z2), n2, config)?;
                    let r2 = mode_correlations(c2, &w2.coefficients);
                    for cw in &weights {
                        let two_mode = pair_mass(&r1, &r2, cw);
                        let reference = single(cw, shift_used);
                        distance += 0.5 * (two_mode - reference).abs();
                    }
                }
            }
            Ok(distance)
        })
        .collect();
    let distances = distances.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LimitScanReport {
        amplitudes: amp_schedule.to_vec(),
        distances,
        shift_used,
    })
}

/// Mass of the window centered on `arg z1 - arg z2 - alpha' + alpha` as the
/// common coherent amplitude of both modes grows; the sequence should climb
/// toward one as the distribution concentrates on that point. `alpha` and
/// `alpha_prime` are the lower-band asymptotic phases of the second and
/// first kernels, as in [`classical_scan`].
pub fn dirac_scan(
    c1: &PhaseKernel,
    c2: &PhaseKernel,
    arg_z1: f64,
    arg_z2: f64,
    amp_schedule: &[f64],
    alpha: f64,
    alpha_prime: f64,
    window: f64,
    config: &ScanConfig,
) -> Result<Vec<f64>> {
    check_schedule(amp_schedule)?;
    let point = arg_z1 - arg_z2 - alpha_prime + alpha;
    let x = IntervalSet::centered(point, window);
    let masses: Vec<Result<f64>> = amp_schedule
        .par_iter()
        .map(|&amp| -> Result<f64> {
            let n = checked_cutoff(amp, config)?;
            require_dim(c1, n, "first-mode kernel")?;
            require_dim(c2, n, "second-mode kernel")?;
            let w1 = coherent_checked(C64::from_polar(amp, arg_z1), n, config)?;
            let w2 = coherent_checked(C64::from_polar(amp, arg_z2), n, config)?;
            let r1 = mode_correlations(c1, &w1.coefficients);
            let r2 = mode_correlations(c2, &w2.coefficients);
            let reach = r1.len().min(r2.len());
            let weights: Vec<C64> = (0..reach)
                .map(|q| fourier_weight(q as i64, &x))
                .collect();
            Ok(pair_mass(&r1, &r2, &weights))
        })
        .collect();
    masses.into_iter().collect()
}

fn check_schedule(amps: &[f64]) -> Result<()> {
    if amps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ValidationFailed(
            "amplitude schedule must be strictly increasing".into(),
        ));
    }
    if amps.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::ValidationFailed(
            "amplitudes must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

fn checked_cutoff(amplitude: f64, config: &ScanConfig) -> Result<usize> {
    let required = required_cutoff(amplitude);
    if required > config.max_per_mode_cutoff {
        return Err(Error::CutoffOverBudget {
            required,
            budget: config.max_per_mode_cutoff,
        });
    }
    Ok(required)
}

fn require_dim(kernel: &PhaseKernel, n_max: usize, context: &'static str) -> Result<()> {
    if kernel.n_max() < n_max {
        return Err(Error::DimensionTooSmall {
            dim: kernel.dim(),
            needed: n_max + 1,
            context,
        });
    }
    Ok(())
}

fn coherent_checked(z: C64, n_max: usize, config: &ScanConfig) -> Result<FockVector> {
    let w = FockVector::coherent(z, n_max);
    if w.tail_mass > config.tail_limit {
        return Err(Error::TailTooLarge {
            amplitude: z.norm(),
            tail: w.tail_mass,
            limit: config.tail_limit,
        });
    }
    Ok(w)
}

/// Band autocorrelations `r_q = sum_m c[m+q, m] conj(w_{m+q}) w_m`: the
/// bra carries the higher occupation, so `r_q` is the `q`-th Fourier
/// coefficient of the single-mode coherent statistics and the coherent pair
/// probability needs nothing else from either mode.
fn mode_correlations(kernel: &PhaseKernel, w: &[C64]) -> Vec<C64> {
    (0..w.len())
        .map(|q| {
            let mut s = C64::new(0.0, 0.0);
            for m in 0..w.len() - q {
                s += kernel.entry(m + q, m) * w[m + q].conj() * w[m];
            }
            s
        })
        .collect()
}

/// `<w1 (x) w2| E(X) |w1 (x) w2>` for the product kernel of the two modes,
/// through the band autocorrelations: the sector sums collapse to
/// `sum_q nu_q(X) r1_q conj(r2_q)` with conjugate-symmetric tails; the
/// second mode enters conjugated because the difference variable subtracts
/// its phase.
fn pair_mass(r1: &[C64], r2: &[C64], weights: &[C64]) -> f64 {
    let reach = r1.len().min(r2.len()).min(weights.len());
    let mut p = (weights[0] * r1[0] * r2[0].conj()).re;
    for q in 1..reach {
        p += 2.0 * (weights[q] * r1[q] * r2[q].conj()).re;
    }
    p
}

fn partition(cells: usize) -> Vec<IntervalSet> {
    use std::f64::consts::TAU;
    (0..cells)
        .map(|j| {
            let a = TAU * j as f64 / cells as f64;
            let b = if j + 1 == cells {
                TAU
            } else {
                TAU * (j + 1) as f64 / cells as f64
            };
            IntervalSet::new(&[(a, b)]).expect("partition cell is a valid arc")
        })
        .collect()
}
