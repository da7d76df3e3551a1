//! TOML simulation configuration: parsing, defaults and validation.
//!
//! Every section is optional except `bath.gamma`. Unknown keys are rejected
//! with their full path.

use std::fmt;
use std::path::{Path, PathBuf};

use gme_core::kernels::StepConvention;
use gme_core::propagator::{MidpointRule, Mode, RunConfig};
use gme_core::{InitialState, QuadraticModel, SpectralDensity, TimeGrid, C64};
use literal::ComplexMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output root.
pub const OUTPUT_DIR_ENV: &str = "GME_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "gme-output";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub bath: BathSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub run: RunSection,
}

/// Either the two-dot shorthand (`eps1`, `eps2`, `delta`) or explicit
/// `hopping` and `pairing` matrices. Matrix entries are numbers or `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hopping: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<ComplexMatrix>,
    /// Sites coupled to the bath, counted from 0.
    #[serde(default = "default_sites")]
    pub coupled_sites: Vec<usize>,
    #[serde(default)]
    pub initial_state: InitialStateKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateKind {
    #[default]
    BellPair,
    Vacuum,
    FullyOccupied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub gamma: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Number of modes in the discretized oracle bath.
    #[serde(default = "default_oracle_modes")]
    pub oracle_modes: usize,
    /// Half-width of the oracle energy window; `30 λ` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub dyson_tol: f64,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    /// `θ(0)` of the self-energy step.
    #[serde(default = "default_theta")]
    pub self_energy_theta: f64,
    /// `θ(0)` of the time-ordered bath correlation.
    #[serde(default = "default_theta")]
    pub time_ordered_theta: f64,
    #[serde(default)]
    pub midpoint: MidpointRule,
    #[serde(default = "default_true")]
    pub project: bool,
    #[serde(default = "default_steady_threshold")]
    pub steady_threshold: f64,
    #[serde(default = "default_steady_window")]
    pub steady_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Gme,
    Redfield,
    Oracle,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Gme => "gme",
            RunMode::Redfield => "redfield",
            RunMode::Oracle => "oracle",
        }
    }

    pub fn solver_mode(self) -> Option<Mode> {
        match self {
            RunMode::Gme => Some(Mode::Gme),
            RunMode::Redfield => Some(Mode::Redfield),
            RunMode::Oracle => None,
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gme" => Ok(RunMode::Gme),
            "redfield" => Ok(RunMode::Redfield),
            "oracle" => Ok(RunMode::Oracle),
            _ => Err(format!("unknown mode {s:?} (expected gme, redfield or oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_modes")]
    pub modes: Vec<RunMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Max-abs population difference below which two trajectories agree.
    #[serde(default = "default_comparison_tolerance")]
    pub comparison_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Gamma,
    Lambda,
    Delta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::Lambda => "lambda",
            SweepAxis::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_sites() -> Vec<usize> {
    vec![0, 1]
}
fn default_lambda() -> f64 {
    1.5
}
fn default_oracle_modes() -> usize {
    400
}
fn default_t_max() -> f64 {
    10.0
}
fn default_n_steps() -> usize {
    1000
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_order() -> usize {
    60
}
fn default_theta() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_steady_threshold() -> f64 {
    1e-6
}
fn default_steady_window() -> usize {
    100
}
fn default_modes() -> Vec<RunMode> {
    vec![RunMode::Gme, RunMode::Redfield, RunMode::Oracle]
}
fn default_comparison_tolerance() -> f64 {
    1e-2
}

const EPS1: f64 = 0.5;
const EPS2: f64 = 1.0;
const DELTA: f64 = 0.7;

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            eps1: None,
            eps2: None,
            delta: None,
            hopping: None,
            pairing: None,
            coupled_sites: default_sites(),
            initial_state: InitialStateKind::default(),
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self { t_max: default_t_max(), n_steps: default_n_steps() }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dyson_tol: default_tol(),
            max_order: default_max_order(),
            self_energy_theta: default_theta(),
            time_ordered_theta: default_theta(),
            midpoint: MidpointRule::default(),
            project: true,
            steady_threshold: default_steady_threshold(),
            steady_window: default_steady_window(),
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            output_dir: None,
            comparison_tolerance: default_comparison_tolerance(),
            sweep: None,
        }
    }
}

fn invalid(path: &str, msg: impl fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive, got {v}")))
    }
}

fn unit_interval(path: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(path, format!("must lie in [0, 1], got {v}")))
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<SimulationConfig, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates configuration text.
pub fn parse_config_str(text: &str) -> Result<SimulationConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut cfg: SimulationConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Validation(format!("{path}: {}", e.into_inner().message()))
    })?;
    cfg.apply_defaults();
    cfg.validate()?;
    Ok(cfg)
}

impl SimulationConfig {
    /// A configuration with every default and the given coupling strength.
    pub fn with_gamma(gamma: f64) -> Self {
        let mut cfg = Self {
            model: ModelSection::default(),
            bath: BathSection {
                gamma,
                lambda: default_lambda(),
                oracle_modes: default_oracle_modes(),
                oracle_window: None,
            },
            grid: GridSection::default(),
            solver: SolverSection::default(),
            run: RunSection::default(),
        };
        cfg.apply_defaults();
        cfg
    }

    /// Fills every optional value so the echoed configuration is explicit.
    pub fn apply_defaults(&mut self) {
        if self.model.hopping.is_none() {
            self.model.eps1.get_or_insert(EPS1);
            self.model.eps2.get_or_insert(EPS2);
            self.model.delta.get_or_insert(DELTA);
        }
        if self.bath.oracle_window.is_none() {
            self.bath.oracle_window = Some(30.0 * self.bath.lambda);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let b = &self.bath;
        if !(b.gamma.is_finite() && b.gamma >= 0.0) {
            return Err(invalid("bath.gamma", format!("must be non-negative, got {}", b.gamma)));
        }
        positive("bath.lambda", b.lambda)?;
        if b.oracle_modes < 2 {
            return Err(invalid("bath.oracle_modes", format!("must be at least 2, got {}", b.oracle_modes)));
        }
        if let Some(w) = b.oracle_window {
            positive("bath.oracle_window", w)?;
        }
        positive("grid.t_max", self.grid.t_max)?;
        if self.grid.n_steps < 10 {
            return Err(invalid("grid.n_steps", format!("must be at least 10, got {}", self.grid.n_steps)));
        }
        let s = &self.solver;
        positive("solver.dyson_tol", s.dyson_tol)?;
        if s.max_order == 0 {
            return Err(invalid("solver.max_order", "must be at least 1"));
        }
        unit_interval("solver.self_energy_theta", s.self_energy_theta)?;
        unit_interval("solver.time_ordered_theta", s.time_ordered_theta)?;
        positive("solver.steady_threshold", s.steady_threshold)?;
        if s.steady_window == 0 {
            return Err(invalid("solver.steady_window", "must be at least 1"));
        }
        let r = &self.run;
        if r.modes.is_empty() {
            return Err(invalid("run.modes", "at least one mode is required"));
        }
        for (i, m) in r.modes.iter().enumerate() {
            if r.modes[..i].contains(m) {
                return Err(invalid("run.modes", format!("{m} listed twice")));
            }
        }
        positive("run.comparison_tolerance", r.comparison_tolerance)?;
        if let Some(sweep) = &r.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("run.sweep.values", "at least one value is required"));
            }
            for &v in &sweep.values {
                let ok = match sweep.axis {
                    SweepAxis::Gamma => v.is_finite() && v >= 0.0,
                    SweepAxis::Lambda => v.is_finite() && v > 0.0,
                    SweepAxis::Delta => v.is_finite(),
                };
                if !ok {
                    return Err(invalid("run.sweep.values", format!("{v} is not a valid {}", sweep.axis.name())));
                }
            }
            if sweep.axis == SweepAxis::Delta && self.model.hopping.is_some() {
                return Err(invalid("run.sweep.axis", "delta sweeps need the eps1/eps2/delta model form"));
            }
        }
        self.model()?;
        Ok(())
    }

    pub fn model(&self) -> Result<QuadraticModel, CliError> {
        let m = &self.model;
        let shorthand = m.eps1.is_some() || m.eps2.is_some() || m.delta.is_some();
        let built = match (&m.hopping, shorthand) {
            (Some(_), true) => {
                return Err(invalid("model", "give either eps1/eps2/delta or hopping/pairing, not both"));
            }
            (Some(h), false) => {
                let hopping = h.to_array().map_err(|e| invalid("model.hopping", e))?;
                let n = hopping.nrows();
                let pairing = match &m.pairing {
                    Some(p) => p.to_array().map_err(|e| invalid("model.pairing", e))?,
                    None => ndarray::Array2::zeros((n, n)),
                };
                QuadraticModel::new(hopping, pairing, m.coupled_sites.clone())
            }
            (None, _) => {
                if m.pairing.is_some() {
                    return Err(invalid("model.pairing", "needs an explicit hopping matrix"));
                }
                let mut model = QuadraticModel::two_dots(
                    m.eps1.unwrap_or(EPS1),
                    m.eps2.unwrap_or(EPS2),
                    m.delta.unwrap_or(DELTA),
                );
                if m.coupled_sites != default_sites() {
                    model = QuadraticModel::new(model.hopping().clone(), model.pairing().clone(), m.coupled_sites.clone())
                        .map_err(|e| invalid("model.coupled_sites", e))?;
                }
                Ok(model)
            }
        };
        built.map_err(|e| invalid("model", e))
    }

    pub fn spectral_density(&self) -> Result<SpectralDensity, CliError> {
        SpectralDensity::new(self.bath.gamma, self.bath.lambda).map_err(|e| invalid("bath", e))
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.grid.t_max, self.grid.n_steps).map_err(|e| invalid("grid", e))
    }

    pub fn initial_state(&self) -> InitialState {
        match self.model.initial_state {
            InitialStateKind::BellPair => InitialState::BellPair,
            InitialStateKind::Vacuum => InitialState::Vacuum,
            InitialStateKind::FullyOccupied => InitialState::FullyOccupied,
        }
    }

    pub fn oracle_window(&self) -> f64 {
        self.bath.oracle_window.unwrap_or(30.0 * self.bath.lambda)
    }

    /// Solver settings for one GME or Redfield run.
    pub fn run_config(&self, mode: Mode) -> Result<RunConfig, CliError> {
        let mut rc = RunConfig::new(self.model()?, self.spectral_density()?, self.time_grid()?).with_mode(mode);
        rc.initial_state = self.initial_state();
        rc.dyson_tol = self.solver.dyson_tol;
        rc.max_order = self.solver.max_order;
        rc.steps = StepConvention {
            self_energy_diagonal: self.solver.self_energy_theta,
            time_ordered_diagonal: self.solver.time_ordered_theta,
        };
        rc.midpoint = self.solver.midpoint;
        rc.project = self.solver.project;
        rc.steady_threshold = self.solver.steady_threshold;
        rc.steady_window = self.solver.steady_window;
        Ok(rc)
    }

    /// Copy with one swept parameter replaced.
    pub fn with_axis_value(&self, axis: SweepAxis, value: f64) -> Self {
        let mut cfg = self.clone();
        match axis {
            SweepAxis::Gamma => cfg.bath.gamma = value,
            SweepAxis::Lambda => {
                // Keep the window tied to λ unless it was set explicitly.
                if cfg.bath.oracle_window == Some(30.0 * cfg.bath.lambda) {
                    cfg.bath.oracle_window = Some(30.0 * value);
                }
                cfg.bath.lambda = value;
            }
            SweepAxis::Delta => cfg.model.delta = Some(value),
        }
        cfg.run.sweep = None;
        cfg
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Other(format!("cannot serialize configuration: {e}")))
    }

    /// Applies command-line overrides and re-validates.
    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(modes) = &o.modes {
            self.run.modes = modes.clone();
        }
        if let Some(tol) = o.dyson_tol {
            self.solver.dyson_tol = tol;
        }
        if let Some(k) = o.max_order {
            self.solver.max_order = k;
        }
        if let Some(n) = o.n_steps {
            self.grid.n_steps = n;
        }
        if let Some(t) = o.t_max {
            self.grid.t_max = t;
        }
        self.validate()
    }
}

/// Values given on the command line; each replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub modes: Option<Vec<RunMode>>,
    pub dyson_tol: Option<f64>,
    pub max_order: Option<usize>,
    pub n_steps: Option<usize>,
    pub t_max: Option<f64>,
}

/// Complex matrix literal: rows of entries, each a number or `[re, im]`.
mod literal {
    use super::C64;
    use ndarray::Array2;
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum Entry {
        Real(f64),
        Complex([f64; 2]),
    }

    impl Entry {
        fn value(self) -> C64 {
            match self {
                Entry::Real(r) => C64::from(r),
                Entry::Complex([re, im]) => C64::new(re, im),
            }
        }
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(transparent)]
    pub struct ComplexMatrix(pub Vec<Vec<Entry>>);

    impl ComplexMatrix {
        pub fn to_array(&self) -> Result<Array2<C64>, String> {
            let n = self.0.len();
            if n == 0 {
                return Err("matrix is empty".into());
            }
            if let Some((i, row)) = self.0.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            Ok(Array2::from_shape_fn((n, n), |(i, j)| self.0[i][j].value()))
        }
    }
}

pub use literal::{ComplexMatrix as MatrixLiteral, Entry as MatrixEntry};
