//! End-to-end determinism: every command runs against its example config,
//! and the artifact must be byte-identical across repeated runs, across
//! `--threads 1` vs `--threads 8`, and against the committed golden file.
//!
//! Regenerate goldens with `UPDATE_GOLDEN=1 cargo test -p phasediff-cli`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// `(config file under configs/, artifact name it writes)`
const CASES: &[(&str, &str)] = &[
    ("validate.json", "validate.json"),
    ("prob.json", "prob.csv"),
    ("density.json", "density.csv"),
    ("moments.json", "moments.json"),
    ("factorize.json", "factorize.json"),
    ("factorize_product.json", "factorize_product.json"),
    ("classical_limit.json", "classical_limit.csv"),
    ("dirac_limit.json", "dirac_limit.csv"),
    ("ban.json", "ban.json"),
    ("spectrum.json", "spectrum.csv"),
    ("barnett_pegg.json", "barnett_pegg.json"),
    ("covariance.json", "covariance.json"),
];

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crate lives at crates/cli")
        .to_path_buf()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run(config: &Path, out: &Path, threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasediff"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads)
        .output()
        .expect("binary spawns")
}

fn run_artifact(config: &Path, artifact: &str, threads: &str) -> Vec<u8> {
    let dir = tempfile::tempdir().expect("tempdir");
    let output = run(config, dir.path(), threads);
    assert!(
        output.status.success(),
        "{} failed with {:?}:\n{}",
        config.display(),
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    std::fs::read(dir.path().join(artifact)).expect("artifact written")
}

#[test]
fn golden_byte_equality_across_runs_and_thread_counts() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    if update {
        std::fs::create_dir_all(golden_dir()).expect("golden dir");
    }
    for (config_name, artifact) in CASES {
        let config = repo_root().join("configs").join(config_name);
        let first = run_artifact(&config, artifact, "1");
        let repeat = run_artifact(&config, artifact, "1");
        let eight = run_artifact(&config, artifact, "8");
        assert_eq!(first, repeat, "{config_name}: bytes differ across runs");
        assert_eq!(
            first, eight,
            "{config_name}: bytes differ across thread counts"
        );

        let golden = golden_dir().join(artifact);
        if update {
            std::fs::write(&golden, &first).expect("write golden");
        } else {
            let expected = std::fs::read(&golden)
                .unwrap_or_else(|e| panic!("missing golden {}: {e}", golden.display()));
            assert_eq!(
                String::from_utf8_lossy(&first),
                String::from_utf8_lossy(&expected),
                "{config_name}: artifact deviates from golden {}",
                golden.display()
            );
        }
        println!("PASS determinism: {config_name} -> {artifact}");
    }
}

#[test]
fn spec_pinned_artifacts() {
    // |0,0> against the canonical difference on [0, pi) has probability 1/2.
    let config = repo_root().join("configs/prob.json");
    let bytes = run_artifact(&config, "prob.csv", "1");
    let text = String::from_utf8(bytes).expect("utf8 CSV");
    assert!(text.contains("0.5"), "prob.csv lacks 0.5:\n{text}");

    // Sector 3 eigenphases are 2 pi r / 4.
    let config = repo_root().join("configs/spectrum.json");
    let text =
        String::from_utf8(run_artifact(&config, "spectrum.csv", "1")).expect("utf8 CSV");
    for row in [
        "3,0,0",
        "3,1,1.5707963267949",
        "3,2,3.14159265358979",
        "3,3,4.71238898038469",
    ] {
        assert!(text.contains(row), "spectrum.csv lacks row {row}:\n{text}");
    }

    // The four-phase kernel draws a refutation witness.
    let config = repo_root().join("configs/factorize.json");
    let text =
        String::from_utf8(run_artifact(&config, "factorize.json", "1")).expect("utf8 JSON");
    assert!(text.contains("\"outcome\": \"not_factorizable\""), "{text}");
    assert!(text.contains("\"mismatch\""), "{text}");
}

#[test]
fn exit_codes_rank_failures() {
    let dir = tempfile::tempdir().expect("tempdir");
    let write = |name: &str, body: &str| -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, body).expect("write config");
        path
    };

    // 1: unreadable config, malformed JSON, schema violation
    let missing = dir.path().join("no_such.json");
    assert_eq!(run(&missing, dir.path(), "1").status.code(), Some(1));
    let bad_json = write("bad.json", "{not json");
    assert_eq!(run(&bad_json, dir.path(), "1").status.code(), Some(1));
    let bad_key = write(
        "key.json",
        r#"{"command":"validate","kernel":{"construct":"canonical","S":2},"output":"x.json","bogus":1}"#,
    );
    assert_eq!(run(&bad_key, dir.path(), "1").status.code(), Some(1));

    // 2: constructed objects fail validation (zero-norm state)
    let zero_state = write(
        "zero.json",
        r#"{"command":"prob","kernel":{"construct":"canonical","S":2},"state":{"kind":"product","first":{"kind":"coeffs","re":[0.0,0.0]},"second":{"kind":"number","n":0}},"interval":[[0.0,1.0]],"output":"p.csv"}"#,
    );
    let out = run(&zero_state, dir.path(), "1");
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // 3: cutoff budget exceeded, both explicitly and through amplitudes
    let tiny_budget = write(
        "budget.json",
        r#"{"command":"validate","kernel":{"construct":"canonical","S":10},"cutoff_budget":5,"output":"v.json"}"#,
    );
    assert_eq!(run(&tiny_budget, dir.path(), "1").status.code(), Some(3));
    let big_amp = write(
        "amp.json",
        r#"{"command":"classical-limit","first":{"kind":"canonical"},"second":{"kind":"canonical"},"z1_modulus":1.0,"z1_phase":0.0,"arg_z2":0.0,"amplitudes":[20.0],"output":"c.csv"}"#,
    );
    assert_eq!(run(&big_amp, dir.path(), "1").status.code(), Some(3));
}
