//! Population-trajectory comparison.

use std::path::Path;

use gme_core::io::PopulationTable;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub a: String,
    pub b: String,
    /// Per-mode max-abs difference over the grid.
    pub max_abs: Vec<f64>,
    /// Per-mode root-mean-square difference over the grid.
    pub rms: Vec<f64>,
    pub max_abs_overall: f64,
    pub rms_overall: f64,
    pub tolerance: f64,
    /// `max_abs_overall <= tolerance`.
    pub within_tolerance: bool,
}

/// Compares two tables on the same grid with the same number of modes.
pub fn compare_tables(
    a_name: &str,
    a: &PopulationTable,
    b_name: &str,
    b: &PopulationTable,
    tolerance: f64,
) -> Result<ComparisonRecord, CliError> {
    if a.n_modes() != b.n_modes() {
        return Err(CliError::Mismatch(format!("{} vs {} modes", a.n_modes(), b.n_modes())));
    }
    if a.times.len() != b.times.len() {
        return Err(CliError::Mismatch(format!("{} vs {} time points", a.times.len(), b.times.len())));
    }
    if a.times.is_empty() {
        return Err(CliError::Mismatch("empty trajectories".into()));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-12 * (1.0 + ta.abs()) {
            return Err(CliError::Mismatch(format!("time grids differ at t = {ta} vs {tb}")));
        }
    }
    let n = a.n_modes();
    let mut max_abs = vec![0.0_f64; n];
    let mut sq = vec![0.0_f64; n];
    for (ra, rb) in a.populations.iter().zip(&b.populations) {
        for k in 0..n {
            let d = (ra[k] - rb[k]).abs();
            max_abs[k] = max_abs[k].max(d);
            sq[k] += d * d;
        }
    }
    let points = a.times.len() as f64;
    let rms: Vec<f64> = sq.iter().map(|s| (s / points).sqrt()).collect();
    let max_abs_overall = max_abs.iter().cloned().fold(0.0, f64::max);
    let rms_overall = (sq.iter().sum::<f64>() / (points * n as f64)).sqrt();
    Ok(ComparisonRecord {
        a: a_name.to_string(),
        b: b_name.to_string(),
        max_abs,
        rms,
        max_abs_overall,
        rms_overall,
        tolerance,
        within_tolerance: max_abs_overall <= tolerance,
    })
}

/// Compares two population CSV files.
pub fn compare_trajectories(a: &Path, b: &Path, tolerance: f64) -> Result<ComparisonRecord, CliError> {
    let read = |p: &Path| {
        PopulationTable::read_file(p).map_err(|e| CliError::Mismatch(format!("{}: {e}", p.display())))
    };
    compare_tables(&a.display().to_string(), &read(a)?, &b.display().to_string(), &read(b)?, tolerance)
}
