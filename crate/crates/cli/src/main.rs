//! Benchmark CLI: `solve` runs `(gamma, h, preconditioner)` grids and
//! writes CSV iteration/error records, `spectrum` emits JSON
//! eigenvalue-distribution reports, `sweep` runs the named table presets.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_h, FileConfig};
use pintwave::experiments::{
    self, emit_csv_path, emit_json_path, preset, ExperimentConfig, RunMode, RunRecord, SkippedRun,
};
use pintwave::precond::PrecondKind;
use pintwave::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pintwave",
    about = "All-at-once wave control solves with parallel-in-time preconditioned MINRES",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve benchmark problems over a (gamma, h, preconditioner) grid.
    Solve(SolveArgs),
    /// Compare the saddle spectrum against the symbol distribution.
    Spectrum(SpectrumArgs),
    /// Run a named table preset.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Problem preset: example-1d | example-2d.
    #[arg(long)]
    problem: Option<String>,
    /// Regularization parameter(s); repeatable or comma-separated.
    #[arg(long = "gamma", value_delimiter = ',')]
    gammas: Vec<f64>,
    /// Mesh step(s); accepts 2^-7, 1/128 or a float.
    #[arg(long = "h", value_delimiter = ',')]
    hs: Vec<String>,
    /// Preconditioner(s): abs-h | strang | tau | mod-strang | mod-tau | none.
    #[arg(long = "precond", value_delimiter = ',')]
    preconds: Vec<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero if any run fails to converge.
    #[arg(long)]
    strict: bool,
    /// Lift the desk-scale mesh caps.
    #[arg(long)]
    allow_large: bool,
    /// TOML config supplying defaults for any unset flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    problem: Option<String>,
    /// Total spatial DoF (square number for 2-D problems).
    #[arg(long)]
    m: Option<usize>,
    /// Time step count(s).
    #[arg(long = "n", value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long = "gamma", value_delimiter = ',')]
    gammas: Vec<f64>,
    /// Also include spectra of these preconditioned matrices.
    #[arg(long = "precond", value_delimiter = ',')]
    preconds: Vec<String>,
    /// JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Preset name: table1..table6 | figures-1d | figures-2d.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    allow_large: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn parse_preconds(names: &[String]) -> Result<Vec<PrecondKind>> {
    names.iter().map(|s| s.parse()).collect()
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let file = load_config(&args.config)?;
    let problem = args
        .problem
        .or(file.problem)
        .unwrap_or_else(|| "example-1d".into());
    let gammas = if args.gammas.is_empty() {
        file.gamma.map(|g| g.into_vec()).unwrap_or_default()
    } else {
        args.gammas
    };
    let hs: Vec<f64> = if args.hs.is_empty() {
        file.h
            .map(|h| h.into_vec().iter().map(|v| v.parse()).collect())
            .transpose()?
            .unwrap_or_default()
    } else {
        args.hs.iter().map(|s| parse_h(s)).collect::<Result<_>>()?
    };
    let preconditioners = if args.preconds.is_empty() {
        match file.precond {
            Some(p) => parse_preconds(&p.into_vec())?,
            None => vec![PrecondKind::Strang],
        }
    } else {
        parse_preconds(&args.preconds)?
    };
    if gammas.is_empty() || hs.is_empty() {
        return Err(Error::InvalidParameter(
            "solve needs at least one --gamma and one --h".into(),
        ));
    }
    let config = ExperimentConfig {
        problem,
        gammas,
        hs,
        preconditioners,
        tol: args.tol.or(file.tol).unwrap_or(1e-10),
        maxit: args.maxit.or(file.maxit).unwrap_or(200),
        mode: RunMode::Solve,
        allow_large: args.allow_large || file.allow_large.unwrap_or(false),
        out: args.out.clone().or(file.out),
        ..Default::default()
    };
    let strict = args.strict || file.strict.unwrap_or(false);
    run_solve_config(&config, strict)
}

fn run_solve_config(config: &ExperimentConfig, strict: bool) -> Result<ExitCode> {
    let (records, skipped) = experiments::run_experiment_with_skips(config)?;
    report_skips(&skipped);
    print_records(&records);
    if let Some(path) = &config.out {
        emit_csv_path(&records, path)?;
        eprintln!("wrote {} records to {}", records.len(), path.display());
    }
    let failures: Vec<&RunRecord> = records.iter().filter(|r| !r.converged).collect();
    if strict && !failures.is_empty() {
        for f in &failures {
            eprintln!(
                "strict: gamma={:.1e} h={:.5e} {} did not converge within {} iterations",
                f.gamma, f.h, f.preconditioner, f.iterations
            );
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn spectrum(args: SpectrumArgs) -> Result<ExitCode> {
    let file = load_config(&args.config)?;
    let gammas = if args.gammas.is_empty() {
        file.gamma.map(|g| g.into_vec()).unwrap_or_default()
    } else {
        args.gammas
    };
    let ns = if args.ns.is_empty() {
        file.n.map(|n| n.into_vec()).unwrap_or_default()
    } else {
        args.ns
    };
    let m = args.m.or(file.m);
    if gammas.is_empty() || ns.is_empty() || m.is_none() {
        return Err(Error::InvalidParameter(
            "spectrum needs --m, --n and --gamma".into(),
        ));
    }
    let config = ExperimentConfig {
        problem: args
            .problem
            .or(file.problem)
            .unwrap_or_else(|| "example-1d".into()),
        gammas,
        mode: RunMode::Spectrum,
        spectrum_m: m,
        spectrum_ns: ns,
        out: args.out.clone().or(file.out),
        ..Default::default()
    };
    let with = parse_preconds(&args.preconds)?;
    let reports = experiments::run_spectrum_study(&config, &with)?;
    for r in &reports {
        println!(
            "m={} n={} gamma={:.1e}: size={} max|diff|={:.3e} mean|diff|={:.3e} interior mean={:.3e} outliers(>{:.0e})={} interval={}",
            r.grid.m, r.grid.n, r.gamma, r.size, r.max_abs_diff, r.mean_abs_diff,
            r.interior_mean_abs_diff, r.delta, r.outlier_count, r.interval_check
        );
    }
    if let Some(path) = &config.out {
        emit_json_path(&reports, path)?;
        eprintln!("wrote {} report(s) to {}", reports.len(), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let file = load_config(&args.config)?;
    let name = args
        .preset
        .or(file.preset)
        .ok_or_else(|| Error::InvalidParameter("sweep needs --preset".into()))?;
    let mut config = preset(&name)?;
    if let Some(tol) = args.tol.or(file.tol) {
        config.tol = tol;
    }
    if let Some(maxit) = args.maxit.or(file.maxit) {
        config.maxit = maxit;
    }
    config.allow_large = args.allow_large || file.allow_large.unwrap_or(false);
    config.out = args.out.or(file.out);
    let strict = args.strict || file.strict.unwrap_or(false);
    match config.mode {
        RunMode::Solve => run_solve_config(&config, strict),
        RunMode::Spectrum => {
            let reports = experiments::run_spectrum_study(&config, &[])?;
            if let Some(path) = &config.out {
                emit_json_path(&reports, path)?;
                eprintln!("wrote {} report(s) to {}", reports.len(), path.display());
            } else {
                for r in &reports {
                    println!(
                        "m={} n={} gamma={:.1e}: mean|diff|={:.3e} (interior {:.3e})",
                        r.grid.m, r.grid.n, r.gamma, r.mean_abs_diff, r.interior_mean_abs_diff
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn report_skips(skipped: &[SkippedRun]) {
    for s in skipped {
        eprintln!(
            "skipped gamma={:.1e} h={:.5e} {}: {}",
            s.gamma, s.h, s.preconditioner, s.reason
        );
    }
}

fn print_records(records: &[RunRecord]) {
    println!(
        "{:>9} {:>11} {:>9} {:>11} {:>5} {:>5} {:>9} {:>10} {:>10} {:>10}",
        "gamma", "h", "dof", "precond", "iter", "conv", "time_s", "e_y", "e_p", "relres"
    );
    for r in records {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.3e}"),
            None => "-".into(),
        };
        println!(
            "{:>9.1e} {:>11.5e} {:>9} {:>11} {:>5} {:>5} {:>9.3} {:>10} {:>10} {:>10.2e}",
            r.gamma,
            r.h,
            r.dof,
            r.preconditioner.to_string(),
            r.iterations,
            r.converged,
            r.wall_time_s,
            fmt_opt(r.e_y),
            fmt_opt(r.e_p),
            r.final_relative_residual
        );
    }
}
