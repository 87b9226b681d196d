//! Deterministic fixtures shared by the criterion benches. No randomness:
//! timings must be comparable across runs.

use num_complex::Complex64 as C64;
use phasediff_core::{CVector, Cutoff, DiffKernel, IntervalSet, PhaseKernel, TwoModeVector};

/// Non-canonical single-mode kernel whose generating vectors trace a fixed
/// spiral in `C^3`; exercises the dense inner-product paths without the
/// shortcuts the constant kernel admits.
pub fn spiral_kernel(n_max: usize) -> PhaseKernel {
    let vectors: Vec<CVector> = (0..=n_max)
        .map(|n| {
            let t = n as f64;
            let mut v = CVector::zeros(3);
            v[0] = C64::new(1.0, 0.0);
            v[1] = C64::from_polar(0.4, 0.9 * t);
            v[2] = C64::from_polar(0.2, 0.3 * t * t);
            let norm = v.norm();
            v.unscale(norm)
        })
        .collect();
    PhaseKernel::from_vectors(&vectors).expect("spiral vectors are unit")
}

/// Product kernel built from two spirals; the usual benchmark subject.
pub fn spiral_pair(s_max: usize) -> DiffKernel {
    let c = spiral_kernel(s_max);
    DiffKernel::from_pair(&c, &c, s_max).expect("spiral kernels are valid")
}

/// Three disjoint arcs covering about half the circle.
pub fn three_arcs() -> IntervalSet {
    IntervalSet::new(&[(0.3, 1.1), (2.0, 2.9), (4.0, 5.5)]).expect("arcs are disjoint")
}

/// Normalized truncated coherent product state at the kernel cutoff.
pub fn coherent_probe(s_max: usize) -> TwoModeVector {
    let cutoff = Cutoff::Total(s_max);
    let raw = TwoModeVector::coherent(C64::from_polar(1.3, 0.4), C64::from_polar(0.9, 2.0), cutoff);
    let coeffs = raw.coeffs().clone();
    let norm = coeffs.norm();
    TwoModeVector::from_coeffs(cutoff, coeffs.unscale(norm)).expect("dimension unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        let kernel = spiral_pair(6);
        assert!(kernel.validate(None).pass);
        let p = phasediff_core::prob_pure(&kernel, &coherent_probe(6), &three_arcs()).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}
