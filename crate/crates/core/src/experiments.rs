//! Experiment runner: builds benchmark problems on coupled grids, solves
//! them with the selected preconditioners, measures errors against the
//! exact solutions, and emits machine-readable CSV/JSON results. Drives
//! both the solver tables and the eigenvalue-distribution studies.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::minres;
use crate::operators::{materialize_dense, SaddleOperator};
use crate::precond::{build, PrecondKind};
use crate::problem::{
    assemble_rhs, error_norms, recover_solution, BlockVector, GridSpec, SpatialDim,
    WaveControlProblem,
};
use crate::spectral::{
    preconditioned_spectrum, symmetric_eigenvalues, PreconditionedSpectrum, SpectralReport,
    SymbolEvaluator,
};

/// Desk-scale cap on the spatial mesh: finer grids need `allow_large`.
pub fn default_h_floor(d: SpatialDim) -> f64 {
    match d {
        SpatialDim::One => 2f64.powi(-8),
        SpatialDim::Two => 2f64.powi(-6),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Solve,
    Spectrum,
}

/// One experiment campaign: the cross product of `gammas` and `hs` per
/// preconditioner in solve mode, or the `(gamma, n)` grid at fixed
/// spatial size in spectrum mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub gammas: Vec<f64>,
    /// Spatial steps; each defines the coupled grid `n = 1/h + 1`.
    pub hs: Vec<f64>,
    pub preconditioners: Vec<PrecondKind>,
    pub tol: f64,
    pub maxit: usize,
    pub mode: RunMode,
    /// Spectrum mode: total spatial DoF (e.g. 15 in 1-D, 49 in 2-D).
    pub spectrum_m: Option<usize>,
    /// Spectrum mode: time-step counts to sweep.
    pub spectrum_ns: Vec<usize>,
    /// Lifts the desk-scale mesh caps.
    pub allow_large: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: "example-1d".into(),
            gammas: Vec::new(),
            hs: Vec::new(),
            preconditioners: vec![PrecondKind::Strang],
            tol: 1e-10,
            maxit: 200,
            mode: RunMode::Solve,
            spectrum_m: None,
            spectrum_ns: Vec::new(),
            allow_large: false,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn dim(&self) -> Result<SpatialDim> {
        match self.problem.as_str() {
            "example-1d" => Ok(SpatialDim::One),
            "example-2d" => Ok(SpatialDim::Two),
            other => Err(Error::UnknownProblem(other.to_string())),
        }
    }
}

/// Named presets reproducing the reference tables.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let gammas_full = vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
    let hs_1d: Vec<f64> = (7..=10).map(|e| 2f64.powi(-e)).collect();
    let hs_2d: Vec<f64> = (5..=8).map(|e| 2f64.powi(-e)).collect();
    match name {
        // Iteration tables.
        "table1" => Ok(ExperimentConfig {
            problem: "example-1d".into(),
            gammas: gammas_full,
            hs: hs_1d,
            preconditioners: vec![PrecondKind::Strang, PrecondKind::Tau, PrecondKind::Identity],
            ..Default::default()
        }),
        "table3" => Ok(ExperimentConfig {
            problem: "example-1d".into(),
            gammas: gammas_full,
            hs: hs_1d,
            preconditioners: vec![PrecondKind::ModStrang, PrecondKind::ModTau],
            ..Default::default()
        }),
        "table4" => Ok(ExperimentConfig {
            problem: "example-2d".into(),
            gammas: gammas_full,
            hs: hs_2d,
            preconditioners: vec![PrecondKind::Strang, PrecondKind::Tau, PrecondKind::Identity],
            ..Default::default()
        }),
        "table6" => Ok(ExperimentConfig {
            problem: "example-2d".into(),
            gammas: gammas_full,
            hs: hs_2d,
            preconditioners: vec![PrecondKind::ModStrang, PrecondKind::ModTau],
            ..Default::default()
        }),
        // Error tables: the h range where exact-solution errors are shown.
        "table2" => Ok(ExperimentConfig {
            problem: "example-1d".into(),
            gammas: gammas_full,
            hs: (5..=8).map(|e| 2f64.powi(-e)).collect(),
            preconditioners: vec![PrecondKind::Strang, PrecondKind::Tau],
            ..Default::default()
        }),
        "table5" => Ok(ExperimentConfig {
            problem: "example-2d".into(),
            gammas: gammas_full,
            hs: hs_2d,
            preconditioners: vec![PrecondKind::Strang, PrecondKind::Tau],
            ..Default::default()
        }),
        // Distribution figures: fixed m, growing n.
        "figures-1d" => Ok(ExperimentConfig {
            problem: "example-1d".into(),
            gammas: vec![1e-4, 1e-6, 1e-8],
            mode: RunMode::Spectrum,
            spectrum_m: Some(15),
            spectrum_ns: vec![32, 64, 128],
            ..Default::default()
        }),
        "figures-2d" => Ok(ExperimentConfig {
            problem: "example-2d".into(),
            gammas: vec![1e-4, 1e-6, 1e-8],
            mode: RunMode::Spectrum,
            spectrum_m: Some(49),
            spectrum_ns: vec![32, 64],
            ..Default::default()
        }),
        other => Err(Error::InvalidParameter(format!(
            "unknown preset `{other}` (expected table1|table2|table3|table4|table5|table6|figures-1d|figures-2d)"
        ))),
    }
}

/// One solve outcome, mirroring the CSV row layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub gamma: f64,
    pub h: f64,
    pub dof: usize,
    pub preconditioner: PrecondKind,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub e_y: Option<f64>,
    pub e_p: Option<f64>,
    pub final_relative_residual: f64,
}

/// A `(gamma, h, preconditioner)` triple skipped by a memory guard.
#[derive(Clone, Debug, Serialize)]
pub struct SkippedRun {
    pub gamma: f64,
    pub h: f64,
    pub preconditioner: PrecondKind,
    pub reason: String,
}

/// Runs the full `(gamma, h, preconditioner)` grid of a solve-mode config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_experiment_with_skips(config).map(|(records, _)| records)
}

/// Like [`run_experiment`] but also reports guard-skipped combinations.
pub fn run_experiment_with_skips(
    config: &ExperimentConfig,
) -> Result<(Vec<RunRecord>, Vec<SkippedRun>)> {
    let d = config.dim()?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let h_floor = default_h_floor(d);
    for &gamma in &config.gammas {
        let problem = WaveControlProblem::preset(&config.problem, gamma)?;
        for &h in &config.hs {
            if !config.allow_large && h < h_floor * (1.0 - 1e-12) {
                for &kind in &config.preconditioners {
                    skipped.push(SkippedRun {
                        gamma,
                        h,
                        preconditioner: kind,
                        reason: format!("mesh finer than desk-scale cap {h_floor:.3e}"),
                    });
                }
                continue;
            }
            let grid = GridSpec::coupled(d, h, gamma)?;
            let rhs = assemble_rhs(&problem, &grid);
            let op = SaddleOperator::new(grid);
            for &kind in &config.preconditioners {
                match solve_one(&op, &grid, &problem, &rhs, kind, config) {
                    Ok(record) => records.push(record),
                    Err(Error::SizeGuard { what, requested, limit }) => {
                        skipped.push(SkippedRun {
                            gamma,
                            h,
                            preconditioner: kind,
                            reason: format!("{what}: {requested} exceeds {limit}"),
                        });
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok((records, skipped))
}

fn solve_one(
    op: &SaddleOperator,
    grid: &GridSpec,
    problem: &WaveControlProblem,
    rhs: &BlockVector,
    kind: PrecondKind,
    config: &ExperimentConfig,
) -> Result<RunRecord> {
    let start = Instant::now();
    let precond = build(kind, grid)?;
    let (x, report) = minres(op, precond.as_ref(), rhs.as_slice(), config.tol, config.maxit)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let (e_y, e_p) = if problem.exact_y.is_some() && problem.exact_p.is_some() {
        let xbv = BlockVector::new(x, grid.m, grid.n)?;
        let (y, p) = recover_solution(&xbv, grid)?;
        let (ey, ep) = error_norms(&y, &p, problem, grid)?;
        (Some(ey), Some(ep))
    } else {
        (None, None)
    };

    Ok(RunRecord {
        gamma: grid.gamma,
        h: grid.h,
        dof: grid.dof(),
        preconditioner: kind,
        iterations: report.iterations,
        converged: report.converged,
        wall_time_s,
        e_y,
        e_p,
        final_relative_residual: report.final_relative_residual,
    })
}

/// Computes the eigenvalue-distribution reports for each `(gamma, n)` of
/// a spectrum-mode config: dense saddle spectrum, `ψ_g` samples on the
/// comparison grid, pairing statistics, and (optionally) the spectra of
/// the preconditioned matrices.
pub fn run_spectrum_study(
    config: &ExperimentConfig,
    with_preconditioners: &[PrecondKind],
) -> Result<Vec<SpectralReport>> {
    let d = config.dim()?;
    let m_total = config
        .spectrum_m
        .ok_or_else(|| Error::InvalidParameter("spectrum mode needs m".into()))?;
    let m1 = match d {
        SpatialDim::One => m_total,
        SpatialDim::Two => {
            let root = (m_total as f64).sqrt().round() as usize;
            if root * root != m_total {
                return Err(Error::InvalidParameter(format!(
                    "2-D spectrum needs a square m, got {m_total}"
                )));
            }
            root
        }
    };
    let mut reports = Vec::new();
    for &gamma in &config.gammas {
        for &n in &config.spectrum_ns {
            let grid = GridSpec::build(d, m1, n, 2.0, gamma)?;
            reports.push(spectrum_report(&grid, with_preconditioners)?);
        }
    }
    Ok(reports)
}

/// One distribution report: sorted eigenvalues of the saddle matrix
/// against sorted `ψ_g` samples, with the edge margin of `2m` entries per
/// half tracked separately.
pub fn spectrum_report(
    grid: &GridSpec,
    with_preconditioners: &[PrecondKind],
) -> Result<SpectralReport> {
    let op = SaddleOperator::new(*grid);
    let dense = materialize_dense(&op)?;
    let eigenvalues = symmetric_eigenvalues(&dense)?;
    let samples = SymbolEvaluator::new(*grid).sample_psi_g();
    let mut report = SpectralReport::new(*grid, eigenvalues, samples, 1e-2, 2 * grid.m)?;
    for &kind in with_preconditioners {
        let precond = build(kind, grid)?;
        let spec = preconditioned_spectrum(precond.as_ref(), &dense)?;
        report.preconditioned.push(PreconditionedSpectrum {
            preconditioner: kind.name().to_string(),
            eigenvalues: spec,
        });
    }
    Ok(report)
}

/// CSV header, pinned: parsers downstream rely on it verbatim.
pub const CSV_HEADER: &str =
    "gamma,h,dof,preconditioner,iterations,converged,wall_time_s,e_y,e_p,final_relative_residual";

/// Writes records as CSV with the pinned header.
pub fn emit_csv<W: Write>(records: &[RunRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for record in records {
        w.serialize(record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv_path(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit_csv(records, file)
}

/// Reads records back from CSV (round-trip support for tooling/tests).
pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in r.deserialize() {
        out.push(record?);
    }
    Ok(out)
}

/// Writes spectrum reports as pretty JSON (a single report unwrapped, a
/// list otherwise).
pub fn emit_json<W: Write>(reports: &[SpectralReport], mut writer: W) -> Result<()> {
    if reports.len() == 1 {
        serde_json::to_writer_pretty(&mut writer, &reports[0])?;
    } else {
        serde_json::to_writer_pretty(&mut writer, reports)?;
    }
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn emit_json_path(reports: &[SpectralReport], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit_json(reports, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gamma_list_gives_empty_records() {
        let config = ExperimentConfig {
            hs: vec![2f64.powi(-3)],
            ..Default::default()
        };
        assert!(run_experiment(&config).unwrap().is_empty());
    }

    #[test]
    fn csv_has_pinned_header_and_round_trips() {
        let records = vec![RunRecord {
            gamma: 1e-4,
            h: 0.125,
            dof: 126,
            preconditioner: PrecondKind::Strang,
            iterations: 9,
            converged: true,
            wall_time_s: 0.01,
            e_y: Some(2.5e-2),
            e_p: None,
            final_relative_residual: 3.2e-11,
        }];
        let mut buf = Vec::new();
        emit_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.count(), 1);

        let parsed = parse_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed.len(), 1);
        let (a, b) = (&parsed[0], &records[0]);
        assert_eq!(a.preconditioner, b.preconditioner);
        assert_eq!(a.iterations, b.iterations);
        assert!((a.gamma - b.gamma).abs() <= 1e-15 * b.gamma);
        assert!((a.e_y.unwrap() - b.e_y.unwrap()).abs() <= 1e-15);
        assert_eq!(a.e_p, None);
    }

    #[test]
    fn small_solve_run_records_errors_and_convergence() {
        let config = ExperimentConfig {
            gammas: vec![1e-4],
            hs: vec![2f64.powi(-3)],
            preconditioners: vec![PrecondKind::Strang, PrecondKind::Identity],
            ..Default::default()
        };
        let records = run_experiment(&config).unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert!(r.converged);
            assert_eq!(r.dof, 2 * 7 * 9);
            assert!(r.e_y.unwrap() > 0.0);
            assert!(r.final_relative_residual <= 1e-10);
        }
    }

    #[test]
    fn determinism_across_repeated_runs() {
        let config = ExperimentConfig {
            gammas: vec![1e-6],
            hs: vec![2f64.powi(-4)],
            preconditioners: vec![PrecondKind::Tau],
            ..Default::default()
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a[0].iterations, b[0].iterations);
        assert_eq!(a[0].e_y.unwrap().to_bits(), b[0].e_y.unwrap().to_bits());
        assert_eq!(a[0].e_p.unwrap().to_bits(), b[0].e_p.unwrap().to_bits());
    }

    #[test]
    fn table1_preset_covers_grid_minus_logged_skips() {
        let config = preset("table1").unwrap();
        assert_eq!(config.gammas.len(), 5);
        assert_eq!(config.hs.len(), 4);
        // Shrink to a desk-friendly subset but keep the guard structure:
        // everything below the cap must be skipped and logged.
        let config = ExperimentConfig {
            gammas: vec![1e-6, 1e-8],
            ..config
        };
        let (records, skipped) = run_experiment_with_skips(&config).unwrap();
        let expected_total = config.gammas.len() * config.hs.len() * config.preconditioners.len();
        assert_eq!(records.len() + skipped.len(), expected_total);
        for s in &skipped {
            assert!(s.h < default_h_floor(SpatialDim::One));
            assert!(!s.reason.is_empty());
        }
        for r in &records {
            assert!(r.h >= default_h_floor(SpatialDim::One));
        }
    }

    #[test]
    fn spectrum_study_emits_paired_arrays_of_full_length() {
        let config = ExperimentConfig {
            problem: "example-1d".into(),
            gammas: vec![1e-4],
            mode: RunMode::Spectrum,
            spectrum_m: Some(15),
            spectrum_ns: vec![32],
            ..Default::default()
        };
        let reports = run_spectrum_study(&config, &[]).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.size, 960);
        assert_eq!(r.eigenvalues.len(), 960);
        assert_eq!(r.samples.len(), 960);

        let mut buf = Vec::new();
        emit_json(&reports, &mut buf).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(parsed["size"], 960);
        assert_eq!(parsed["eigenvalues"].as_array().unwrap().len(), 960);
        assert_eq!(parsed["samples"].as_array().unwrap().len(), 960);
        assert!(parsed["max_abs_diff"].is_number());
        assert!(parsed["mean_abs_diff"].is_number());
        assert!(parsed["outlier_count"].is_number());
        assert!(parsed["interval_check"].is_boolean());
        assert!(parsed["gamma"].is_number());
        assert!(parsed["grid"]["m1"].is_number());
    }

    #[test]
    fn spectrum_study_rejects_nonsquare_2d_m() {
        let config = ExperimentConfig {
            problem: "example-2d".into(),
            gammas: vec![1e-4],
            mode: RunMode::Spectrum,
            spectrum_m: Some(48),
            spectrum_ns: vec![8],
            ..Default::default()
        };
        assert!(run_spectrum_study(&config, &[]).is_err());
    }

    #[test]
    fn presets_resolve() {
        for name in ["table1", "table2", "table3", "table4", "table5", "table6", "figures-1d", "figures-2d"] {
            assert!(preset(name).is_ok(), "{name}");
        }
        assert!(preset("table7").is_err());
    }
}
