//! Shared oracles and seeded generators for the integration suites.
//!
//! Everything here recomputes library quantities through an independent
//! route: quadrature for kernel entries, direct four-index assembly for
//! observables, tagged Riemann sums for moments. The generators are all
//! deterministic in the provided RNG so suites can share draw sequences.

#![allow(dead_code)]

use phasediff_core::{
    eval_diff, fourier_weight, C64, CMatrix, CVector, Cutoff, DiffKernel, GramFamily,
    IntervalSet, PhaseKernel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Legendre P_n and its derivative at `x` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, Newton-refined from the
/// Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Coherent-vacuum kernel entry by radial quadrature,
/// `c[n, m] = 2 int_0^R r^{n+m+1} e^{-r^2} dr / sqrt(n! m!)`,
/// evaluated in the log domain so nothing overflows up to `n + m = 40`.
/// The tail beyond `R = 12` is below 1e-30 of the integral.
pub fn radial_gamma_oracle(n: usize, m: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(24);
    let norm = 0.5 * (ln_factorial(n) + ln_factorial(m));
    let power = (n + m + 1) as f64;
    let panels = 48;
    let width = 12.0 / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        for (x, w) in nodes.iter().zip(&weights) {
            let r = a + 0.5 * width * (x + 1.0);
            sum += w * 0.5 * width * (power * r.ln() - r * r - norm).exp();
        }
    }
    2.0 * sum
}

/// Dense four-index assembly of the observable on `Total(s_max)`: every
/// label pair gets `<xi_a|xi_b> nu_{n-m}(X)` when the totals agree and zero
/// otherwise, with no block bookkeeping shared with the library path.
pub fn dense_eval_oracle(family: &GramFamily, s_max: usize, x: &IntervalSet) -> CMatrix {
    let cutoff = Cutoff::Total(s_max);
    let labels = cutoff.labels();
    let dim = cutoff.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for (i, &(n, k)) in labels.iter().enumerate() {
        for (j, &(m, l)) in labels.iter().enumerate() {
            if n + k == m + l {
                let inner = family.inner((n, k), (m, l)).expect("family covers the cutoff");
                out[(i, j)] = inner * fourier_weight(n as i64 - m as i64, x);
            }
        }
    }
    out
}

/// Midpoint-tagged Riemann-Stieltjes sum of `int theta dE(theta)` over an
/// equal partition of the circle.
pub fn riemann_first_moment(kernel: &DiffKernel, cells: usize) -> CMatrix {
    let dim = Cutoff::Total(kernel.s_max()).dim();
    let mut acc = CMatrix::zeros(dim, dim);
    let h = TAU / cells as f64;
    for j in 0..cells {
        let a = j as f64 * h;
        let cell = IntervalSet::new(&[(a, a + h)]).expect("cell is a valid arc");
        acc += eval_diff(kernel, &cell).matrix().scale(a + 0.5 * h);
    }
    acc
}

/// Unit vector with standard complex Gaussian entries.
pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    loop {
        let mut v = CVector::zeros(dim);
        for i in 0..dim {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let phase: f64 = rng.gen_range(0.0..TAU);
            let r = (-2.0 * u.ln()).sqrt();
            v[i] = C64::from_polar(r, phase);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            return v.unscale(norm);
        }
    }
}

pub fn random_unit_coeffs(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    random_unit(rng, dim).iter().copied().collect()
}

/// Gram family of independent unit vectors in a small common space.
pub fn random_gram_family(rng: &mut ChaCha8Rng, s_max: usize) -> GramFamily {
    let mut items = Vec::new();
    for s in 0..=s_max {
        for n in 0..=s {
            items.push(((n, s - n), random_unit(rng, 3)));
        }
    }
    GramFamily::new(s_max, items)
}

pub fn random_gram_kernel(rng: &mut ChaCha8Rng, s_max: usize) -> DiffKernel {
    DiffKernel::from_gram(&random_gram_family(rng, s_max), s_max)
        .expect("unit Gram vectors always build a valid kernel")
}

/// One to three disjoint arcs from sorted breakpoints; degenerate arcs are
/// dropped so the set never collapses to measure zero.
pub fn random_interval_set(rng: &mut ChaCha8Rng) -> IntervalSet {
    let arcs = rng.gen_range(1..=3usize);
    let mut points: Vec<f64> = (0..2 * arcs).map(|_| rng.gen_range(0.0..TAU)).collect();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    let mut pairs = Vec::new();
    for c in points.chunks(2) {
        if c[1] - c[0] > 1e-3 {
            pairs.push((c[0], c[1]));
        }
    }
    if pairs.is_empty() {
        pairs.push((1.0, 2.0));
    }
    IntervalSet::new(&pairs).expect("sorted breakpoints give disjoint arcs")
}

/// Phase kernel whose generating vectors share a dominant common component:
/// `v_n = sqrt(mu) e_0 + sqrt(1 - mu) g_n` with `mu = 0.85` and `g_n` a
/// random real unit vector in an ambient space of dimension `6 (n_max + 1)`.
/// Every inner product then satisfies `Re c[n, m] >= 2 mu - 1`, so all bands
/// of a product of two such kernels stay far from the factorization pivot
/// tolerance, and the large common weight leaves the extracted candidate
/// factors positive semidefinite with a wide margin.
pub fn random_mixture_kernel(rng: &mut ChaCha8Rng, n_max: usize) -> PhaseKernel {
    let mu = 0.85f64;
    let ambient = 6 * (n_max + 1);
    let vectors: Vec<CVector> = (0..=n_max)
        .map(|_| {
            let g = random_unit(rng, ambient);
            let mut v = CVector::zeros(1 + ambient);
            v[0] = C64::new(mu.sqrt(), 0.0);
            for i in 0..ambient {
                v[1 + i] = C64::new(g[i].re, 0.0) * C64::new((1.0 - mu).sqrt(), 0.0);
            }
            let norm = v.norm();
            v.unscale(norm)
        })
        .collect();
    PhaseKernel::from_vectors(&vectors).expect("mixture vectors are unit")
}

pub fn random_product_kernel(rng: &mut ChaCha8Rng, s_max: usize) -> DiffKernel {
    let c1 = random_mixture_kernel(rng, s_max);
    let c2 = random_mixture_kernel(rng, s_max);
    DiffKernel::from_pair(&c1, &c2, s_max).expect("product of valid kernels")
}

/// Largest singular value through the Hermitian square.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    phasediff_core::hermitian_eigenvalues_of(&gram)
        .expect("Gram square is Hermitian")
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}
