//! Orchestration of GME, Redfield and oracle runs and parameter sweeps.
//!
//! Layout of an output directory:
//!
//! ```text
//! effective_config.toml
//! <mode>/populations.csv
//! <mode>/diagnostics.json
//! gme/convergence.csv
//! comparison.json
//! FAILED                      (only when the run failed)
//! ```
//!
//! A sweep writes one such directory per point, named `<axis>_<value>`, plus
//! `sweep_summary.csv` and `sweep_summary.json` at the top.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gme_core::io::{write_convergence, PopulationTable};
use gme_core::model::initial_covariance;
use gme_core::oracle::{bath_quality, discretize_bath, exact_evolve, recurrence_horizon, BathQuality, BATH_TOLERANCE};
use gme_core::propagator::{self, RunDiagnostics, SteadyState};
use gme_core::GmeError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compare::{compare_tables, ComparisonRecord};
use crate::config::{RunMode, SimulationConfig, SweepAxis, DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};
use crate::error::CliError;

pub const CONFIG_ECHO: &str = "effective_config.toml";
pub const FAILURE_MARKER: &str = "FAILED";
pub const POPULATIONS: &str = "populations.csv";
pub const DIAGNOSTICS: &str = "diagnostics.json";
pub const CONVERGENCE: &str = "convergence.csv";
pub const COMPARISON: &str = "comparison.json";
pub const SWEEP_SUMMARY_CSV: &str = "sweep_summary.csv";
pub const SWEEP_SUMMARY_JSON: &str = "sweep_summary.json";

/// Output root: explicit flag, then the config file, then the environment, then the default.
pub fn resolve_output_dir(flag: Option<&Path>, cfg: &SimulationConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.run.output_dir {
        return p.clone();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDiagnostics {
    pub bath_modes: usize,
    pub window: f64,
    pub spacing: f64,
    pub recurrence_horizon: f64,
    pub bath_quality: BathQuality,
    pub final_populations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateRow {
    pub mode: RunMode,
    pub final_populations: Vec<f64>,
    /// Present for solver runs whose right-hand side settled.
    pub steady_state: Option<SteadyState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub pairs: Vec<ComparisonRecord>,
    pub steady_states: Vec<SteadyStateRow>,
}

/// Outcome of one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointReport {
    pub dir: PathBuf,
    pub comparison: ComparisonReport,
    /// Dyson orders used by the GME run, if there was one.
    pub gme_orders: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub dir: String,
    pub order_reached: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Orders are non-decreasing along the listed values (GME sweeps only).
    pub orders_monotone: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentReport {
    Single(PointReport),
    Sweep(SweepSummary),
}

/// Runs everything the configuration asks for under `out_dir`.
///
/// On failure whatever was already written stays in place and a `FAILED`
/// marker records the message and exit code.
pub fn run_experiment(cfg: &SimulationConfig, out_dir: &Path) -> Result<ExperimentReport, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(e).context(&out_dir.display().to_string()))?;
    let marker = out_dir.join(FAILURE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let result = write_echo(cfg, out_dir).and_then(|()| match &cfg.run.sweep {
        Some(sweep) => run_sweep(cfg, sweep.axis, &sweep.values, out_dir).map(ExperimentReport::Sweep),
        None => run_point(cfg, out_dir).map(ExperimentReport::Single),
    });
    if let Err(e) = &result {
        write_failure(out_dir, e);
    }
    result
}

fn write_failure(dir: &Path, err: &CliError) {
    let text = format!("exit_code = {}\nerror = {err}\n", err.exit_code());
    if let Err(io) = fs::write(dir.join(FAILURE_MARKER), text) {
        log::error!("cannot write failure marker in {}: {io}", dir.display());
    }
}

/// The echo omits the output directory so re-running it elsewhere is safe.
fn write_echo(cfg: &SimulationConfig, dir: &Path) -> Result<(), CliError> {
    let mut echo = cfg.clone();
    echo.run.output_dir = None;
    fs::write(dir.join(CONFIG_ECHO), echo.to_toml()?)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

struct ModeResult {
    mode: RunMode,
    table: PopulationTable,
    steady_state: Option<SteadyState>,
    orders: Option<usize>,
}

fn run_point(cfg: &SimulationConfig, dir: &Path) -> Result<PointReport, CliError> {
    let mut results = Vec::new();
    let mut failure = None;
    for &mode in &cfg.run.modes {
        let mode_dir = dir.join(mode.name());
        fs::create_dir_all(&mode_dir)?;
        log::info!("{}: running {mode}", dir.display());
        let outcome = match mode.solver_mode() {
            Some(_) => run_solver(cfg, mode, &mode_dir),
            None => run_oracle(cfg, &mode_dir),
        };
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                failure = Some(e.context(mode.name()));
                break;
            }
        }
    }
    // Compare whatever was produced, even when a later mode failed.
    let comparison = comparison_report(cfg, &results)?;
    write_json(&dir.join(COMPARISON), &comparison)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let gme_orders = results.iter().find_map(|r| r.orders);
    Ok(PointReport { dir: dir.to_path_buf(), comparison, gme_orders })
}

fn run_solver(cfg: &SimulationConfig, mode: RunMode, dir: &Path) -> Result<ModeResult, CliError> {
    let solver_mode = mode.solver_mode().expect("solver mode");
    let rc = cfg.run_config(solver_mode)?;
    let out = propagator::run(&rc)?;
    let table = PopulationTable::new(out.trajectory.times.clone(), out.trajectory.populations.clone());
    table.write_file(dir.join(POPULATIONS))?;
    write_json(&dir.join(DIAGNOSTICS), &out.diagnostics)?;
    let RunDiagnostics { steady_state, dyson, .. } = out.diagnostics;
    let mut orders = None;
    if let Some(d) = dyson {
        write_convergence(&d.deltas, BufWriter::new(File::create(dir.join(CONVERGENCE))?))?;
        if !d.converged {
            return Err(CliError::Divergence(format!(
                "Dyson series did not reach tolerance {:e} within {} orders (last delta {:e})",
                rc.dyson_tol,
                d.order_reached,
                d.deltas.last().copied().unwrap_or(f64::NAN)
            )));
        }
        orders = Some(d.order_reached);
    }
    Ok(ModeResult { mode, table, steady_state, orders })
}

fn run_oracle(cfg: &SimulationConfig, dir: &Path) -> Result<ModeResult, CliError> {
    let sd = cfg.spectral_density()?;
    let grid = cfg.time_grid()?;
    let model = cfg.model()?;
    let bath = discretize_bath(&sd, cfg.bath.oracle_modes, cfg.oracle_window())?;
    let quality = bath_quality(&bath, &sd, grid.t_max(), 200, BATH_TOLERANCE);
    let horizon = recurrence_horizon(&bath);
    let mut diagnostics = OracleDiagnostics {
        bath_modes: bath.n_modes(),
        window: bath.window(),
        spacing: bath.spacing(),
        recurrence_horizon: horizon,
        bath_quality: quality.clone(),
        final_populations: Vec::new(),
    };
    if !quality.passed {
        write_json(&dir.join(DIAGNOSTICS), &diagnostics)?;
        return Err(GmeError::BathQuality(format!(
            "Lorentzian deviation {:.3e} (window bound {:.3e}), sampling deviation {:.3e}, tolerance {:.1e}; \
             raise bath.oracle_modes or bath.oracle_window",
            quality.lorentzian_deviation, quality.truncation_bound, quality.sampling_deviation, quality.tolerance
        ))
        .into());
    }
    let initial = initial_covariance(&cfg.initial_state(), model.n_modes())?;
    let states = match exact_evolve(&model, &bath, &initial, &grid) {
        Ok(s) => s,
        Err(e) => {
            write_json(&dir.join(DIAGNOSTICS), &diagnostics)?;
            return Err(e.into());
        }
    };
    let populations: Vec<Vec<f64>> = states.iter().map(|s| s.populations()).collect();
    diagnostics.final_populations = populations.last().cloned().unwrap_or_default();
    let table = PopulationTable::new(grid.times(), populations);
    table.write_file(dir.join(POPULATIONS))?;
    write_json(&dir.join(DIAGNOSTICS), &diagnostics)?;
    Ok(ModeResult { mode: RunMode::Oracle, table, steady_state: None, orders: None })
}

fn comparison_report(cfg: &SimulationConfig, results: &[ModeResult]) -> Result<ComparisonReport, CliError> {
    let tolerance = cfg.run.comparison_tolerance;
    let mut pairs = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            pairs.push(compare_tables(a.mode.name(), &a.table, b.mode.name(), &b.table, tolerance)?);
        }
    }
    let steady_states = results
        .iter()
        .map(|r| SteadyStateRow {
            mode: r.mode,
            final_populations: r.table.populations.last().cloned().unwrap_or_default(),
            steady_state: r.steady_state.clone(),
        })
        .collect();
    Ok(ComparisonReport { tolerance, pairs, steady_states })
}

/// Directory name of a sweep point, e.g. `gamma_0.25`.
pub fn point_dir_name(axis: SweepAxis, value: f64) -> String {
    format!("{}_{value}", axis.name())
}

fn run_sweep(cfg: &SimulationConfig, axis: SweepAxis, values: &[f64], dir: &Path) -> Result<SweepSummary, CliError> {
    let outcomes: Vec<(f64, String, Result<PointReport, CliError>)> = values
        .par_iter()
        .map(|&v| {
            let name = point_dir_name(axis, v);
            let point = cfg.with_axis_value(axis, v);
            let point_dir = dir.join(&name);
            let res = point
                .validate()
                .and_then(|()| run_experiment(&point, &point_dir))
                .and_then(|r| match r {
                    ExperimentReport::Single(p) => Ok(p),
                    ExperimentReport::Sweep(_) => Err(CliError::Other("nested sweep".into())),
                })
                .map_err(|e| e.context(&format!("{} = {v}", axis.name())));
            (v, name, res)
        })
        .collect();
    let has_gme = cfg.run.modes.contains(&RunMode::Gme);
    let mut points = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for (value, name, res) in outcomes {
        let (order_reached, error) = match res {
            Ok(p) => (p.gme_orders, None),
            Err(e) => {
                let msg = e.to_string();
                first_error.get_or_insert(e);
                (None, Some(msg))
            }
        };
        points.push(SweepPoint { value, dir: name, order_reached, error });
    }
    let orders_monotone = (has_gme && first_error.is_none()).then(|| {
        let mut sorted: Vec<&SweepPoint> = points.iter().collect();
        sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
        sorted.windows(2).all(|w| w[0].order_reached <= w[1].order_reached)
    });
    let summary = SweepSummary { axis, points, orders_monotone };
    write_sweep_csv(&dir.join(SWEEP_SUMMARY_CSV), &summary)?;
    write_json(&dir.join(SWEEP_SUMMARY_JSON), &summary)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn write_sweep_csv(path: &Path, summary: &SweepSummary) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},order_reached,status", summary.axis.name())?;
    for p in &summary.points {
        let orders = p.order_reached.map(|k| k.to_string()).unwrap_or_default();
        let status = if p.error.is_some() { "failed" } else { "ok" };
        writeln!(w, "{:.17e},{orders},{status}", p.value)?;
    }
    w.flush()?;
    Ok(())
}
