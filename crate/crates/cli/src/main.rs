//! JSON-configured front end for the phase-difference observable library.
//!
//! One command per run, read from `--config`; artifacts (CSV tables and JSON
//! reports) land under `--out`. Outputs are byte-identical across repeated
//! runs and across `--threads` settings. Exit codes: 0 success, 1 config or
//! I/O error, 2 validation failure, 3 cutoff budget exceeded.

mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "phasediff", version, about = "Phase-difference observable runner")]
struct Flags {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Directory receiving the artifact named by the config's `output`.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Override for the config's `tolerance` field.
    #[arg(long)]
    tol: Option<f64>,

    /// Rayon thread-pool size (0 or absent: library default).
    #[arg(long)]
    threads: Option<usize>,

    /// Reserved for randomized property commands; accepted and unused.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    // clap's own error exit code is 2, which this tool reserves for
    // validation failures; flag errors are config errors.
    let flags = match Flags::try_parse() {
        Ok(flags) => flags,
        Err(e) => {
            // --help/--version are "errors" to try_parse but succeed.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let _ = flags.seed;

    if let Some(n) = flags.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let text = match std::fs::read_to_string(&flags.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", flags.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match RunConfig::parse(&text, flags.tol) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    match commands::run(&cfg, &flags.out) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
