//! Command execution: builds library objects from the parsed config, runs
//! the requested computation, and renders one deterministic artifact.

use std::path::Path;

use phasediff_core::{
    ban_b_idempotence_defect, ban_covariance_residuals, barnett_pegg_prob, classical_scan,
    commutator_checks, covariance_report, cyclic_moment, density_diff, dirac_scan, factorize,
    first_moment, hermitian_eigenvalues_of, prob, prob_pure, reconstruct_from_first_moment,
    required_cutoff, C64, CMatrix, Cutoff, DiffKernel, FactorizationResult, FixedPhase,
    FockVector, FourierFunction, IntervalSet, PhaseKernel, ScanConfig, SecondMode, TwoModeState,
    TwoModeVector,
};

use crate::config::{
    CommandConfig, FockSpec, KernelSpec, ModeKernelSpec, RunConfig, SecondSpec, StateSpec,
};
use crate::emit::{csv, fmt_f64, Json};

/// Failures ranked by exit code: 1 config, 2 validation, 3 budget.
pub enum CliError {
    Config(String),
    Validation(String),
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Validation(m) | CliError::Budget(m) => m,
        }
    }
}

impl From<phasediff_core::Error> for CliError {
    fn from(e: phasediff_core::Error) -> Self {
        use phasediff_core::Error as E;
        match e {
            E::CutoffOverBudget { .. } | E::TailTooLarge { .. } => {
                CliError::Budget(e.to_string())
            }
            E::ValidationFailed(_)
            | E::NonUnitNorm { .. }
            | E::NonUnitVector { .. }
            | E::NonHermitianInput { .. }
            | E::EigenFailure(_) => CliError::Validation(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub struct RunOutcome {
    pub summary: String,
    pub exit: i32,
}

/// Runs the configured command and writes its artifact under `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let (content, summary, exit) = dispatch(cfg)?;
    let path = out_dir.join(&cfg.output);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", parent.display()))
        })?;
    }
    std::fs::write(&path, content)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(RunOutcome {
        summary: format!("{summary} -> {}", cfg.output),
        exit,
    })
}

fn dispatch(cfg: &RunConfig) -> Result<(String, String, i32), CliError> {
    let budget = cfg.cutoff_budget;
    match &cfg.command {
        CommandConfig::Validate { kernel } => run_validate(kernel, cfg.tolerance, budget),
        CommandConfig::Prob { kernel, state, interval } => {
            run_prob(kernel, state, interval, budget)
        }
        CommandConfig::Density { kernel, state, grid } => {
            run_density(kernel, state, *grid, budget)
        }
        CommandConfig::Moments { kernel, orders } => run_moments(kernel, orders, budget),
        CommandConfig::Factorize { kernel } => run_factorize(kernel, cfg.tolerance, budget),
        CommandConfig::ClassicalLimit {
            first,
            second,
            z1_modulus,
            z1_phase,
            arg_z2,
            amplitudes,
            alpha,
            cells,
        } => run_classical(
            first, second, *z1_modulus, *z1_phase, *arg_z2, amplitudes, *alpha, *cells, budget,
        ),
        CommandConfig::DiracLimit {
            first,
            second,
            arg_z1,
            arg_z2,
            amplitudes,
            alpha,
            alpha_prime,
            window,
        } => run_dirac(
            first,
            second,
            *arg_z1,
            *arg_z2,
            amplitudes,
            *alpha,
            *alpha_prime,
            *window,
            budget,
        ),
        CommandConfig::Ban { s_max, interval, beta, margin } => {
            run_ban(*s_max, interval, *beta, *margin, budget)
        }
        CommandConfig::Spectrum { s_max } => run_spectrum(*s_max, budget),
        CommandConfig::BarnettPegg { first, second, interval } => {
            run_barnett_pegg(first, second, interval, budget)
        }
        CommandConfig::Covariance { kernel, alpha, beta, interval } => {
            run_covariance(kernel, *alpha, *beta, interval, budget)
        }
    }
}

// ---------------------------------------------------------------------------
// builders

fn check_budget(needed: usize, budget: usize, what: &str) -> Result<(), CliError> {
    if needed > budget {
        return Err(CliError::Budget(format!(
            "{what} needs cutoff {needed}, budget is {budget}"
        )));
    }
    Ok(())
}

fn build_kernel(spec: &KernelSpec, budget: usize) -> Result<(DiffKernel, String), CliError> {
    check_budget(spec.s_max(), budget, "kernel")?;
    match spec {
        KernelSpec::Canonical { s_max } => Ok((
            DiffKernel::canonical(*s_max),
            format!("canonical(S={s_max})"),
        )),
        KernelSpec::Example2 { s_max, thetas } => Ok((
            DiffKernel::four_phase_example(*thetas, *s_max)?,
            format!("example2(S={s_max})"),
        )),
        KernelSpec::Product { s_max, first, second } => {
            let c1 = build_mode(*first, *s_max);
            let c2 = build_mode(*second, *s_max);
            Ok((
                DiffKernel::from_pair(&c1, &c2, *s_max)?,
                format!(
                    "product({}, {}, S={s_max})",
                    mode_name(*first),
                    mode_name(*second)
                ),
            ))
        }
    }
}

fn build_mode(spec: ModeKernelSpec, n_max: usize) -> PhaseKernel {
    match spec {
        ModeKernelSpec::Canonical => PhaseKernel::canonical(n_max),
        ModeKernelSpec::CoherentVacuum => PhaseKernel::coherent_vacuum(n_max),
    }
}

fn mode_name(spec: ModeKernelSpec) -> &'static str {
    match spec {
        ModeKernelSpec::Canonical => "canonical",
        ModeKernelSpec::CoherentVacuum => "coherent_vacuum",
    }
}

/// Unit-normalized single-mode coefficients; truncated specs (coherent) are
/// renormalized on the retained basis.
fn fock_coeffs(spec: &FockSpec) -> Result<Vec<C64>, CliError> {
    let coeffs = match spec {
        FockSpec::Number { n, n_max } => FockVector::number(*n, *n_max).coefficients,
        FockSpec::Coherent { modulus, phase, n_max } => {
            FockVector::coherent(C64::from_polar(*modulus, *phase), *n_max).coefficients
        }
        FockSpec::Coeffs { re, im } => re
            .iter()
            .zip(im)
            .map(|(&a, &b)| C64::new(a, b))
            .collect(),
    };
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(CliError::Validation(
            "mode coefficients have zero norm".into(),
        ));
    }
    Ok(coeffs.into_iter().map(|c| c / norm).collect())
}

fn build_state(spec: &StateSpec, s_max: usize) -> Result<(TwoModeState, String), CliError> {
    let cutoff = Cutoff::Total(s_max);
    match spec {
        StateSpec::Basis { n, k } => {
            Ok((TwoModeState::number(*n, *k, cutoff)?, format!("|{n},{k}>")))
        }
        StateSpec::Product { first, second } => {
            let a = fock_coeffs(first)?;
            let b = fock_coeffs(second)?;
            let v = TwoModeVector::product(
                &FockVector::from_coefficients(a),
                &FockVector::from_coefficients(b),
                cutoff,
            );
            let norm = v.coeffs().norm();
            if norm < 1e-12 {
                return Err(CliError::Validation(
                    "product state loses all mass at this cutoff".into(),
                ));
            }
            let unit = TwoModeVector::from_coeffs(cutoff, v.coeffs().unscale(norm))?;
            Ok((TwoModeState::pure(&unit)?, "product".into()))
        }
    }
}

fn interval_set(arcs: &[(f64, f64)]) -> Result<IntervalSet, CliError> {
    Ok(IntervalSet::new(arcs)?)
}

fn interval_json(arcs: &[(f64, f64)]) -> Json {
    Json::Arr(
        arcs.iter()
            .map(|&(a, b)| Json::Arr(vec![Json::Num(a), Json::Num(b)]))
            .collect(),
    )
}

fn spectral_norm(m: &CMatrix) -> Result<f64, CliError> {
    let gram = m.adjoint() * m;
    let eigs = hermitian_eigenvalues_of(&gram)?;
    Ok(eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// commands

fn run_validate(
    spec: &KernelSpec,
    tol: Option<f64>,
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let (kernel, desc) = build_kernel(spec, budget)?;
    let report = kernel.validate(tol);
    let blocks = report
        .blocks
        .iter()
        .map(|b| {
            Json::Obj(vec![
                ("sector", Json::Int(b.sector as i64)),
                ("hermiticity_residual", Json::Num(b.hermiticity_residual)),
                ("max_diag_deviation", Json::Num(b.max_diag_deviation)),
                ("min_eigenvalue", Json::Num(b.min_eigenvalue)),
            ])
        })
        .collect();
    let doc = Json::Obj(vec![
        ("command", Json::Str("validate".into())),
        ("kernel", Json::Str(desc)),
        ("tolerance", Json::Num(report.tolerance)),
        ("pass", Json::Bool(report.pass)),
        (
            "first_violation",
            match &report.first_violation {
                Some(v) => Json::Str(v.clone()),
                None => Json::Null,
            },
        ),
        ("blocks", Json::Arr(blocks)),
    ]);
    let exit = if report.pass { 0 } else { 2 };
    let summary = format!(
        "validate: {} ({} sectors)",
        if report.pass { "pass" } else { "fail" },
        report.blocks.len()
    );
    Ok((doc.render(), summary, exit))
}

fn run_prob(
    spec: &KernelSpec,
    state_spec: &StateSpec,
    arcs: &[(f64, f64)],
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let (kernel, _) = build_kernel(spec, budget)?;
    let (state, _) = build_state(state_spec, spec.s_max())?;
    let mut rows = Vec::with_capacity(arcs.len() + 1);
    for (i, &(a, b)) in arcs.iter().enumerate() {
        let p = prob(&kernel, &state, &interval_set(&[(a, b)])?)?;
        rows.push(vec![format!("arc_{i}"), fmt_f64(a), fmt_f64(b), fmt_f64(p)]);
    }
    let total = prob(&kernel, &state, &interval_set(arcs)?)?;
    rows.push(vec![
        "set".into(),
        String::new(),
        String::new(),
        fmt_f64(total),
    ]);
    let content = csv(&["label", "lower", "upper", "probability"], &rows);
    let summary = format!("prob: set probability {}", fmt_f64(total));
    Ok((content, summary, 0))
}

fn run_density(
    spec: &KernelSpec,
    state_spec: &StateSpec,
    grid: usize,
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let (kernel, _) = build_kernel(spec, budget)?;
    let (state, _) = build_state(state_spec, spec.s_max())?;
    let mut rows = Vec::with_capacity(grid);
    for j in 0..grid {
        let theta = std::f64::consts::TAU * j as f64 / grid as f64;
        let g = density_diff(&kernel, &state, theta)?;
        rows.push(vec![fmt_f64(theta), fmt_f64(g)]);
    }
    let content = csv(&["theta", "density"], &rows);
    Ok((content, format!("density: {grid} nodes"), 0))
}

fn run_moments(
    spec: &KernelSpec,
    orders: &[usize],
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let (kernel, desc) = build_kernel(spec, budget)?;
    let moment = first_moment(&kernel);
    let m = moment.matrix();
    let pi = std::f64::consts::PI;
    let diag_dev = (0..m.nrows())
        .map(|i| (m[(i, i)] - C64::new(pi, 0.0)).norm())
        .fold(0.0f64, f64::max);
    let rec = reconstruct_from_first_moment(&moment)?;
    let round_trip = (0..=kernel.s_max())
        .map(|s| phasediff_core::max_abs(&(rec.block(s) - kernel.block(s))))
        .fold(0.0f64, f64::max);
    let index00 = Cutoff::Total(kernel.s_max())
        .index_of(0, 0)
        .expect("(0,0) lies inside every total-number cutoff");
    let mut cyclic = Vec::with_capacity(orders.len());
    for &r in orders {
        let c = cyclic_moment(&kernel, r);
        cyclic.push(Json::Obj(vec![
            ("order", Json::Int(r as i64)),
            ("operator_norm", Json::Num(spectral_norm(c.matrix())?)),
            (
                "vacuum_column_norm",
                Json::Num(c.matrix().column(index00).norm()),
            ),
        ]));
    }
    let doc = Json::Obj(vec![
        ("command", Json::Str("moments".into())),
        ("kernel", Json::Str(desc)),
        ("diagonal_max_deviation_from_pi", Json::Num(diag_dev)),
        ("reconstruction_residual", Json::Num(round_trip)),
        ("cyclic_moments", Json::Arr(cyclic)),
    ]);
    let summary = format!(
        "moments: diagonal deviation {}, reconstruction residual {}",
        fmt_f64(diag_dev),
        fmt_f64(round_trip)
    );
    Ok((doc.render(), summary, 0))
}

fn run_factorize(
    spec: &KernelSpec,
    tol: Option<f64>,
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let (kernel, desc) = build_kernel(spec, budget)?;
    let tol = tol.unwrap_or(1e-8);
    let mut fields = vec![
        ("command", Json::Str("factorize".into())),
        ("kernel", Json::Str(desc)),
        ("tolerance", Json::Num(tol)),
    ];
    let outcome;
    match factorize(&kernel, tol)? {
        FactorizationResult::Factorized { c1, c2, residual } => {
            outcome = "factorized";
            fields.push(("outcome", Json::Str(outcome.into())));
            fields.push(("residual", Json::Num(residual)));
            fields.push(("first_factor_band", band_json(&c1)));
            fields.push(("second_factor_band", band_json(&c2)));
        }
        FactorizationResult::NotFactorizable { witness } => {
            outcome = "not_factorizable";
            fields.push(("outcome", Json::Str(outcome.into())));
            fields.push((
                "witness",
                Json::Obj(vec![
                    ("order", Json::Int(witness.order as i64)),
                    ("n", Json::Int(witness.n as i64)),
                    ("k", Json::Int(witness.k as i64)),
                    ("mismatch", Json::Num(witness.mismatch)),
                    ("statement", Json::Str(witness.to_string())),
                ]),
            ));
        }
        FactorizationResult::Indeterminate { reason } => {
            outcome = "indeterminate";
            fields.push(("outcome", Json::Str(outcome.into())));
            fields.push(("reason", Json::Str(reason)));
        }
    }
    let doc = Json::Obj(fields);
    Ok((doc.render(), format!("factorize: {outcome}"), 0))
}

/// First off-diagonal band `c[n+1, n]` of a single-mode kernel as
/// `[re, im]` pairs.
fn band_json(kernel: &PhaseKernel) -> Json {
    Json::Arr(
        (0..kernel.n_max())
            .map(|n| {
                let e = kernel.entry(n + 1, n);
                Json::Arr(vec![Json::Num(e.re), Json::Num(e.im)])
            })
            .collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn run_classical(
    first: &ModeKernelSpec,
    second: &SecondSpec,
    z1_modulus: f64,
    z1_phase: f64,
    arg_z2: f64,
    amplitudes: &[f64],
    alpha: f64,
    cells: usize,
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let n_req = scan_cutoff(amplitudes, budget)?;
    let c1 = build_mode(*first, n_req);
    let second = match second {
        SecondSpec::Mode(spec) => SecondMode::Kernel(build_mode(*spec, n_req)),
        SecondSpec::Fixed { alpha } => SecondMode::Fixed(FixedPhase::new(*alpha)),
    };
    let sc = ScanConfig {
        cells,
        max_per_mode_cutoff: budget,
        ..ScanConfig::default()
    };
    let report = classical_scan(
        &c1,
        &second,
        C64::from_polar(z1_modulus, z1_phase),
        arg_z2,
        amplitudes,
        alpha,
        &sc,
    )?;
    let rows: Vec<Vec<String>> = report
        .amplitudes
        .iter()
        .zip(&report.distances)
        .map(|(&a, &d)| vec![fmt_f64(a), fmt_f64(d)])
        .collect();
    let content = csv(&["amplitude", "tv_distance"], &rows);
    let summary = format!(
        "classical-limit: shift {}, final distance {}",
        fmt_f64(report.shift_used),
        fmt_f64(report.distances.last().copied().unwrap_or(f64::NAN))
    );
    Ok((content, summary, 0))
}

#[allow(clippy::too_many_arguments)]
fn run_dirac(
    first: &ModeKernelSpec,
    second: &ModeKernelSpec,
    arg_z1: f64,
    arg_z2: f64,
    amplitudes: &[f64],
    alpha: f64,
    alpha_prime: f64,
    window: f64,
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let n_req = scan_cutoff(amplitudes, budget)?;
    let c1 = build_mode(*first, n_req);
    let c2 = build_mode(*second, n_req);
    let sc = ScanConfig {
        max_per_mode_cutoff: budget,
        ..ScanConfig::default()
    };
    let masses = dirac_scan(
        &c1,
        &c2,
        arg_z1,
        arg_z2,
        amplitudes,
        alpha,
        alpha_prime,
        window,
        &sc,
    )?;
    let rows: Vec<Vec<String>> = amplitudes
        .iter()
        .zip(&masses)
        .map(|(&a, &m)| vec![fmt_f64(a), fmt_f64(m)])
        .collect();
    let content = csv(&["amplitude", "window_mass"], &rows);
    let summary = format!(
        "dirac-limit: final window mass {}",
        fmt_f64(masses.last().copied().unwrap_or(f64::NAN))
    );
    Ok((content, summary, 0))
}

/// Per-mode cutoff required by the largest amplitude, checked against the
/// budget before any kernel is built.
fn scan_cutoff(amplitudes: &[f64], budget: usize) -> Result<usize, CliError> {
    let max_amp = amplitudes
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |m| m.max(a))))
        .ok_or_else(|| CliError::Config("amplitudes must be nonempty".into()))?;
    if !(max_amp > 0.0) {
        return Err(CliError::Config(
            "amplitudes must be positive numbers".into(),
        ));
    }
    let n_req = required_cutoff(max_amp);
    check_budget(n_req, budget, "amplitude scan")?;
    Ok(n_req)
}

fn run_ban(
    s_max: usize,
    arcs: &[(f64, f64)],
    beta: f64,
    margin: usize,
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    check_budget(s_max, budget, "cutoff")?;
    let cutoff = Cutoff::Total(s_max);
    let x = interval_set(arcs)?;
    let cov = ban_covariance_residuals(&x, beta, cutoff);
    let comm = commutator_checks(&DiffKernel::canonical(s_max), cutoff)?;
    let defect = ban_b_idempotence_defect(&x, cutoff, margin);
    let doc = Json::Obj(vec![
        ("command", Json::Str("ban".into())),
        ("S", Json::Int(s_max as i64)),
        ("interval", interval_json(arcs)),
        ("beta", Json::Num(beta)),
        (
            "covariance",
            Json::Obj(vec![
                ("factor1_residual", Json::Num(cov.factor1)),
                ("factor2_residual", Json::Num(cov.factor2)),
            ]),
        ),
        (
            "commutators",
            Json::Obj(vec![
                ("ban_shift_residual", Json::Num(comm.ban_shift_residual)),
                ("ban_shift_boundary", Json::Int(comm.ban_shift_boundary as i64)),
                ("cyclic_residual", Json::Num(comm.cyclic_residual)),
                ("cyclic_boundary", Json::Int(comm.cyclic_boundary as i64)),
                ("single_mode_residual", Json::Num(comm.single_mode_residual)),
            ]),
        ),
        (
            "idempotence",
            Json::Obj(vec![
                ("margin", Json::Int(margin as i64)),
                ("defect", Json::Num(defect)),
            ]),
        ),
    ]);
    let summary = format!(
        "ban: covariance residual {}, shift commutator residual {}",
        fmt_f64(cov.factor1),
        fmt_f64(comm.ban_shift_residual)
    );
    Ok((doc.render(), summary, 0))
}

fn run_spectrum(s_max: usize, budget: usize) -> Result<(String, String, i32), CliError> {
    check_budget(s_max, budget, "cutoff")?;
    let mut rows = Vec::new();
    for s in 0..=s_max {
        let phases = phasediff_core::phi12_block_eigenphases(s)?;
        for (r, phase) in phases.into_iter().enumerate() {
            rows.push(vec![s.to_string(), r.to_string(), fmt_f64(phase)]);
        }
    }
    let content = csv(&["sector", "index", "eigenphase"], &rows);
    Ok((content, format!("spectrum: sectors 0..={s_max}"), 0))
}

fn run_barnett_pegg(
    first: &FockSpec,
    second: &FockSpec,
    arcs: &[(f64, f64)],
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let a = fock_coeffs(first)?;
    let b = fock_coeffs(second)?;
    let total = (a.len() - 1) + (b.len() - 1);
    let s_max = total.max(1);
    check_budget(s_max, budget, "cutoff")?;
    let x = interval_set(arcs)?;
    let boundary = barnett_pegg_prob(
        &FourierFunction::new(a.clone()),
        &FourierFunction::new(b.clone()),
        &x,
    )?;
    // Total(a_max + b_max) retains every product label, so the product of
    // unit vectors is exactly unit and both routes see the same state.
    let v = TwoModeVector::product(
        &FockVector::from_coefficients(a),
        &FockVector::from_coefficients(b),
        Cutoff::Total(s_max),
    );
    let kernel_route = prob_pure(&DiffKernel::canonical(s_max), &v, &x)?;
    let doc = Json::Obj(vec![
        ("command", Json::Str("barnett-pegg".into())),
        ("interval", interval_json(arcs)),
        ("boundary_route", Json::Num(boundary)),
        ("kernel_route", Json::Num(kernel_route)),
        ("difference", Json::Num((boundary - kernel_route).abs())),
    ]);
    let summary = format!(
        "barnett-pegg: probability {}, route difference {}",
        fmt_f64(boundary),
        fmt_f64((boundary - kernel_route).abs())
    );
    Ok((doc.render(), summary, 0))
}

fn run_covariance(
    spec: &KernelSpec,
    alpha: f64,
    beta: f64,
    arcs: &[(f64, f64)],
    budget: usize,
) -> Result<(String, String, i32), CliError> {
    let (kernel, desc) = build_kernel(spec, budget)?;
    let x = interval_set(arcs)?;
    let report = covariance_report(&kernel, alpha, beta, &x);
    let doc = Json::Obj(vec![
        ("command", Json::Str("covariance".into())),
        ("kernel", Json::Str(desc)),
        ("alpha", Json::Num(alpha)),
        ("beta", Json::Num(beta)),
        ("interval", interval_json(arcs)),
        ("theta_residual", Json::Num(report.theta_residual)),
        ("invariance_residual", Json::Num(report.invariance_residual)),
        ("factor2_residual", Json::Num(report.factor2_residual)),
        ("factor1_residual", Json::Num(report.factor1_residual)),
    ]);
    let summary = format!(
        "covariance: theta residual {}, factor1 residual {}",
        fmt_f64(report.theta_residual),
        fmt_f64(report.factor1_residual)
    );
    Ok((doc.render(), summary, 0))
}
