//! Covariant phase-difference observables on truncated two-mode Fock spaces.

pub mod analysis;
pub mod companions;
pub mod error;
pub mod fock;
pub mod limits;
pub mod phase1;
pub mod phasediff;
pub mod tolerance;

pub use analysis::{
    barnett_pegg_prob, cyclic_moment, density_diff, density_tilde, first_moment,
    reconstruct_from_first_moment, FourierFunction,
};
pub use companions::{
    ban_b, ban_b_idempotence_defect, ban_covariance_residuals, ban_d, ban_vacuum_reduction,
    commutator_checks, e12_sector_block, factor2_projection_solution, ll_polar_check,
    phi12_block_eigenphases, sg_operators, unitary_eigenphases, BanBasisMap, BanCovariance,
    BanLabel, BanShift, CommutatorReport,
};
pub use error::{Error, Result};
pub use fock::{
    hermitian_eigendecomposition, hermitian_eigenvalues, hermitian_eigenvalues_of,
    hermiticity_residual, number_diff_projection, number_sum_projection, theta_unitary, C64,
    CMatrix, CVector, Cutoff, FockVector, TwoModeOperator, TwoModeState, TwoModeVector,
};
pub use limits::{
    classical_scan, coherent_covariance_check, dirac_scan, required_cutoff, LimitScanReport,
    ScanConfig, SecondMode,
};
pub use phase1::{
    eval_phase, fourier_weight, phase_density, FixedPhase, IntervalSet, PhaseKernel,
};
pub use phasediff::{
    covariance_report, covariance_residual, eval_diff, factorize, fixed_phase_diff,
    gram_from_kernel, max_abs, prob, prob_pure, BlockCheck, CovarianceReport, DiffKernel,
    DiffValidation, FactorizationResult, FactorizationWitness, GramFamily,
};
