//! End-to-end checks of the CLI surface: flags, config files, output
//! artifacts and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn pintwave(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pintwave"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn solve_writes_csv_with_pinned_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = pintwave(
        &[
            "solve",
            "--problem",
            "example-1d",
            "--gamma",
            "1e-6",
            "--h",
            "2^-4",
            "--precond",
            "strang,tau",
            "--tol",
            "1e-10",
            "--maxit",
            "200",
            "--out",
            "results.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gamma,h,dof,preconditioner,iterations,converged,wall_time_s,e_y,e_p,final_relative_residual"
    );
    assert_eq!(lines.count(), 2);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("strang"));
    assert!(stdout.contains("tau"));
}

#[test]
fn spectrum_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = pintwave(
        &[
            "spectrum",
            "--problem",
            "example-1d",
            "--m",
            "7",
            "--n",
            "16",
            "--gamma",
            "1e-4",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["size"], 2 * 7 * 16);
    assert_eq!(parsed["eigenvalues"].as_array().unwrap().len(), 224);
    assert_eq!(parsed["samples"].as_array().unwrap().len(), 224);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        r#"
problem = "example-1d"
gamma = 1e-6
h = "2^-4"
precond = "tau"
out = "fromfile.csv"
"#,
    )
    .unwrap();
    // Flag overrides the file's preconditioner; everything else from file.
    let out = pintwave(
        &["solve", "--config", "run.toml", "--precond", "strang"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fromfile.csv")).unwrap();
    assert!(csv.contains("strang"));
    assert!(!csv.contains("tau"));
}

#[test]
fn strict_mode_fails_on_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    // maxit 2 cannot converge the unpreconditioned solve.
    let out = pintwave(
        &[
            "solve",
            "--problem",
            "example-1d",
            "--gamma",
            "1e-2",
            "--h",
            "2^-4",
            "--precond",
            "none",
            "--maxit",
            "2",
            "--strict",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));

    // Without --strict the same run exits cleanly.
    let out = pintwave(
        &[
            "solve",
            "--problem",
            "example-1d",
            "--gamma",
            "1e-2",
            "--h",
            "2^-4",
            "--precond",
            "none",
            "--maxit",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success());
}

#[test]
fn sweep_preset_skips_oversized_grids_by_default() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.toml"),
        r#"
preset = "table1"
maxit = 1
tol = 1e-1
"#,
    )
    .unwrap();
    let out = pintwave(
        &["sweep", "--config", "sweep.toml", "--out", "t1.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("skipped"), "skips must be logged: {stderr}");
    let csv = std::fs::read_to_string(dir.path().join("t1.csv")).unwrap();
    // 5 gammas x 2 desk-scale h x 3 preconditioners, minus abs-free rows:
    // table1 carries strang/tau/none, all of which run at every size.
    assert_eq!(csv.lines().count() - 1, 5 * 2 * 3);
}

#[test]
fn bad_arguments_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = pintwave(
        &[
            "solve",
            "--problem",
            "example-1d",
            "--gamma",
            "1e-6",
            "--h",
            "2^-4",
            "--precond",
            "frobenius",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobenius"));

    let out = pintwave(&["sweep", "--preset", "table9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
