//! Covariance-matrix form of the master equation.
//!
//! With the dressed kernel `𝒢^>` the memory matrix is
//! `M(t) = −∫_0^t dτ 𝔸(0)^T 𝒢^>(t, τ) 𝔸(τ − t)` and the covariance obeys the
//! differential Lyapunov equation `dΓ/dt = XΓ + ΓX^T + Y` with
//! `X = 2 Re M − 2ih` and `Y = −(M − M^T + M^† − M^*)`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyson::{solve_dyson, DysonProblem};
use crate::error::{GmeError, Result};
use crate::grid::TimeGrid;
use crate::kernels::{SpectralDensity, StepConvention, TwoTimeKernel};
use crate::linalg;
use crate::model::{
    build_nambu, diagonalize_bogoliubov, initial_covariance, interaction_coefficients, majorana_generator,
    BogoliubovData, InitialState, MajoranaGenerator, QuadraticModel,
};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Pre-projection deviation of `X`, `Y` above which assembly is rejected.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-6;
/// Allowed excursion of the covariance spectrum beyond `[−1, 1]`.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-6;

/// Majorana covariance `Γ_kq = ⟨w_k w_q − w_q w_k⟩` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    gamma: Array2<C64>,
    time: f64,
}

impl CovarianceState {
    pub fn new(gamma: Array2<C64>, time: f64) -> Self {
        Self { gamma, time }
    }

    pub fn gamma(&self) -> &Array2<C64> {
        &self.gamma
    }

    pub fn into_gamma(self) -> Array2<C64> {
        self.gamma
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_modes(&self) -> usize {
        self.gamma.nrows() / 2
    }

    /// Largest violation of `Γ^T = −Γ` and `Γ^* = −Γ`.
    pub fn structure_defect(&self) -> f64 {
        structure_defect(&self.gamma)
    }

    /// Eigenvalues of the Hermitian matrix `Γ` (equivalently of `iΓ` up to a
    /// factor `i`); physical states have them in `[−1, 1]`.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(linalg::eigvalsh(&self.gamma)?.to_vec())
    }

    /// Checks the structure to `tolerance` and the spectrum to [`PHYSICALITY_TOLERANCE`].
    pub fn validate(&self, tolerance: f64) -> Result<()> {
        let n = self.gamma.nrows();
        if n == 0 || n % 2 != 0 || self.gamma.ncols() != n {
            return Err(GmeError::InvalidState(format!("covariance has shape {:?}", self.gamma.dim())));
        }
        if self.gamma.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(GmeError::InvalidState("covariance has non-finite entries".into()));
        }
        let defect = self.structure_defect();
        if defect > tolerance {
            return Err(GmeError::InvalidState(format!(
                "covariance is not pure imaginary antisymmetric (defect {defect:e})"
            )));
        }
        let worst = self.spectrum()?.into_iter().fold(0.0_f64, |a, e| if e.abs() > a.abs() { e } else { a });
        if worst.abs() > 1.0 + PHYSICALITY_TOLERANCE {
            return Err(GmeError::Physicality { time: self.time, eigenvalue: worst });
        }
        Ok(())
    }

    pub fn populations(&self) -> Vec<f64> {
        populations(&self.gamma)
    }
}

fn structure_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut d = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            d = d.max((m[[i, j]] + m[[j, i]]).norm()).max(2.0 * m[[i, j]].re.abs());
        }
    }
    d
}

/// `⟨a_n^† a_n⟩ = (1 + iΓ_{2n,2n+1})/2`, clipped to `[0, 1]`.
pub fn populations(gamma: &Array2<C64>) -> Vec<f64> {
    (0..gamma.nrows() / 2)
        .map(|k| {
            let p = 0.5 * (1.0 + (I * gamma[[2 * k, 2 * k + 1]]).re);
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                log::warn!("population of mode {k} is {p}, clipping to [0, 1]");
            }
            p.clamp(0.0, 1.0)
        })
        .collect()
}

/// `𝔸(0)` and `𝔸(−t_m)` for every grid offset `m`.
#[derive(Debug, Clone)]
pub struct InteractionTable {
    grid: TimeGrid,
    backward: Vec<Array2<C64>>,
}

impl InteractionTable {
    pub fn new(bog: &BogoliubovData, grid: &TimeGrid) -> Self {
        let backward = (0..grid.len()).map(|m| interaction_coefficients(bog, -grid.time(m))).collect();
        Self { grid: *grid, backward }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn at_zero(&self) -> &Array2<C64> {
        &self.backward[0]
    }

    /// `𝔸(−t_m)`.
    pub fn backward(&self, m: usize) -> &Array2<C64> {
        &self.backward[m]
    }
}

/// `M(t_i)` by a composite trapezoid over `τ ∈ [0, t_i]`.
fn memory_at(kernel: &TwoTimeKernel, table: &InteractionTable, i: usize) -> Array2<C64> {
    let grid = kernel.grid();
    let width = table.at_zero().ncols();
    let mut q = Array2::<C64>::zeros((2, width));
    for j in 0..=i {
        let w = grid.trapezoid_weight(i, j);
        if w == 0.0 {
            continue;
        }
        let g = kernel.matrix(i, j);
        let a = table.backward(i - j);
        for alpha in 0..2 {
            for beta in 0..2 {
                let f = g[alpha][beta] * w;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..width {
                    q[[alpha, c]] += f * a[[beta, c]];
                }
            }
        }
    }
    table.at_zero().t().dot(&q).mapv(|z| -z)
}

/// Memory matrix at a single grid time.
pub fn memory_matrix(kernel: &TwoTimeKernel, bog: &BogoliubovData, t: f64) -> Result<Array2<C64>> {
    let i = kernel.grid().index_of(t).ok_or(GmeError::OffGrid(t))?;
    let table = InteractionTable::new(bog, kernel.grid());
    Ok(memory_at(kernel, &table, i))
}

/// Memory matrices at every grid time; `kernel` must be valid on `τ ≤ t`.
pub fn memory_matrices(kernel: &TwoTimeKernel, bog: &BogoliubovData) -> Vec<Array2<C64>> {
    let table = InteractionTable::new(bog, kernel.grid());
    (0..kernel.len()).into_par_iter().map(|i| memory_at(kernel, &table, i)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCoefficients {
    pub m: Array2<C64>,
    /// Real drift matrix.
    pub x: Array2<f64>,
    /// Pure imaginary antisymmetric source.
    pub y: Array2<C64>,
    /// Largest pre-projection deviation from the structure of `X` and `Y`.
    pub deviation: f64,
}

/// `X = 2 Re[ΩM] − 2iΩh`, `Y = −Ω(M + ζM^T + M^† + ζM^*)Ω` with `ζ = −1`, `Ω = 1`.
pub fn lyapunov_coefficients(m: &Array2<C64>, generator: &MajoranaGenerator) -> Result<LyapunovCoefficients> {
    let zeta = -1.0;
    let omega = generator.structure();
    let om = omega.dot(m);
    let xc = om.mapv(|z| C64::from(2.0 * z.re)) - omega.dot(generator.h()).mapv(|z| 2.0 * I * z);
    let x_dev = xc.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    let inner = m + &m.t().mapv(|z| z * zeta) + linalg::adjoint(m) + linalg::conj(m).mapv(|z| z * zeta);
    let mut y = omega.dot(&inner).dot(omega).mapv(|z| -z);
    let y_dev = linalg::project_imag_antisymmetric(&mut y);
    let deviation = x_dev.max(y_dev);
    if deviation > COEFFICIENT_TOLERANCE {
        return Err(GmeError::Consistency(format!(
            "Lyapunov coefficients deviate from their structure by {deviation:e}"
        )));
    }
    if deviation > 0.0 {
        log::trace!("projected Lyapunov coefficients (deviation {deviation:e})");
    }
    Ok(LyapunovCoefficients { m: m.clone(), x: xc.mapv(|z| z.re), y, deviation })
}

/// `XΓ + ΓX^T + Y`.
pub fn lyapunov_rhs(coeffs: &LyapunovCoefficients, gamma: &Array2<C64>) -> Array2<C64> {
    let x = coeffs.x.mapv(C64::from);
    x.dot(gamma) + gamma.dot(&x.t()) + &coeffs.y
}

/// How the integrator obtains coefficients halfway between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MidpointRule {
    /// Linear interpolation of `M` between neighbouring grid points.
    #[default]
    Interpolate,
    /// Evaluate the kernel on a grid of half the spacing.
    HalfGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub time: f64,
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub states: Vec<Array2<C64>>,
    /// `max |dΓ/dt|` at each grid time.
    pub rhs_norms: Vec<f64>,
    /// Largest per-step structure deviation removed by projection.
    pub max_projection_drift: f64,
    /// Extremes of the covariance spectrum over the trajectory.
    pub spectrum_range: (f64, f64),
}

impl Trajectory {
    /// First time from which the right-hand side stays below `threshold` for `window` steps.
    pub fn steady_state(&self, threshold: f64, window: usize) -> Option<SteadyState> {
        let n = self.rhs_norms.len();
        let mut run = 0;
        for i in 0..n {
            if self.rhs_norms[i] < threshold {
                run += 1;
                if run > window {
                    let start = i - window;
                    return Some(SteadyState { time: self.times[start], populations: self.populations[start].clone() });
                }
            } else {
                run = 0;
            }
        }
        None
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().map(|p| p.as_slice()).unwrap_or(&[])
    }
}

/// Classical RK4 for `dΓ/dt = XΓ + ΓX^T + Y`, projecting `Γ` back onto
/// pure-imaginary antisymmetric matrices after every step.
///
/// `nodes[i]` holds the coefficients at `t_i`; `midpoints[i]`, when given, at
/// `t_i + dt/2`, otherwise they are interpolated linearly.
pub fn integrate_covariance(
    initial: &CovarianceState,
    nodes: &[LyapunovCoefficients],
    midpoints: Option<&[LyapunovCoefficients]>,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    integrate_covariance_with(initial, nodes, midpoints, grid, true)
}

/// As [`integrate_covariance`]; with `project = false` the accumulated
/// structure deviation is only measured and stays in the state.
pub fn integrate_covariance_with(
    initial: &CovarianceState,
    nodes: &[LyapunovCoefficients],
    midpoints: Option<&[LyapunovCoefficients]>,
    grid: &TimeGrid,
    project: bool,
) -> Result<Trajectory> {
    if nodes.len() != grid.len() {
        return Err(GmeError::InvalidParameter(format!(
            "{} coefficient sets for {} grid points",
            nodes.len(),
            grid.len()
        )));
    }
    if let Some(mid) = midpoints {
        if mid.len() != grid.n_steps() {
            return Err(GmeError::InvalidParameter("midpoint coefficients do not match the grid".into()));
        }
    }
    initial.validate(1e-9)?;
    let dt = grid.dt();
    let mut gamma = initial.gamma().clone();
    let mut traj = Trajectory {
        times: grid.times(),
        populations: Vec::with_capacity(grid.len()),
        states: Vec::with_capacity(grid.len()),
        rhs_norms: Vec::with_capacity(grid.len()),
        max_projection_drift: 0.0,
        spectrum_range: (f64::INFINITY, f64::NEG_INFINITY),
    };
    record(&mut traj, &gamma, &nodes[0], 0.0)?;
    for i in 0..grid.n_steps() {
        let interpolated;
        let mid = match midpoints {
            Some(m) => &m[i],
            None => {
                interpolated = average(&nodes[i], &nodes[i + 1]);
                &interpolated
            }
        };
        let k1 = lyapunov_rhs(&nodes[i], &gamma);
        let k2 = lyapunov_rhs(mid, &(&gamma + &k1.mapv(|z| z * (0.5 * dt))));
        let k3 = lyapunov_rhs(mid, &(&gamma + &k2.mapv(|z| z * (0.5 * dt))));
        let k4 = lyapunov_rhs(&nodes[i + 1], &(&gamma + &k3.mapv(|z| z * dt)));
        gamma = gamma + (k1 + (k2 + k3).mapv(|z| z * 2.0) + k4).mapv(|z| z * (dt / 6.0));
        let drift = if project {
            linalg::project_imag_antisymmetric(&mut gamma)
        } else {
            linalg::project_imag_antisymmetric(&mut gamma.clone())
        };
        traj.max_projection_drift = traj.max_projection_drift.max(drift);
        record(&mut traj, &gamma, &nodes[i + 1], grid.time(i + 1))?;
    }
    Ok(traj)
}

fn record(traj: &mut Trajectory, gamma: &Array2<C64>, coeffs: &LyapunovCoefficients, t: f64) -> Result<()> {
    let eigenvalues = linalg::eigvalsh(gamma)?;
    for &e in eigenvalues.iter() {
        if !e.is_finite() || e.abs() > 1.0 + PHYSICALITY_TOLERANCE {
            return Err(GmeError::Physicality { time: t, eigenvalue: e });
        }
        traj.spectrum_range.0 = traj.spectrum_range.0.min(e);
        traj.spectrum_range.1 = traj.spectrum_range.1.max(e);
    }
    traj.rhs_norms.push(linalg::max_abs(&lyapunov_rhs(coeffs, gamma)));
    traj.populations.push(populations(gamma));
    traj.states.push(gamma.clone());
    Ok(())
}

fn average(a: &LyapunovCoefficients, b: &LyapunovCoefficients) -> LyapunovCoefficients {
    LyapunovCoefficients {
        m: (&a.m + &b.m).mapv(|z| z * 0.5),
        x: (&a.x + &b.x) * 0.5,
        y: (&a.y + &b.y).mapv(|z| z * 0.5),
        deviation: a.deviation.max(b.deviation),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Dressed kernel from the converged Dyson series.
    Gme,
    /// Bare kernel, i.e. the series truncated at its first term.
    Redfield,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gme => "gme",
            Mode::Redfield => "redfield",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: QuadraticModel,
    pub spectral_density: SpectralDensity,
    pub grid: TimeGrid,
    pub initial_state: InitialState,
    pub mode: Mode,
    pub dyson_tol: f64,
    pub max_order: usize,
    pub steps: StepConvention,
    pub midpoint: MidpointRule,
    pub steady_threshold: f64,
    pub steady_window: usize,
    /// Per-step structure projection of the covariance.
    pub project: bool,
}

impl RunConfig {
    /// Defaults: bell-pair start, GME mode, tolerance `1e−6`, at most 60 orders.
    pub fn new(model: QuadraticModel, spectral_density: SpectralDensity, grid: TimeGrid) -> Self {
        Self {
            model,
            spectral_density,
            grid,
            initial_state: InitialState::BellPair,
            mode: Mode::Gme,
            dyson_tol: 1e-6,
            max_order: 60,
            steps: StepConvention::default(),
            midpoint: MidpointRule::Interpolate,
            steady_threshold: 1e-6,
            steady_window: 100,
            project: true,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DysonSummary {
    pub order_reached: usize,
    pub converged: bool,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub mode: Mode,
    pub max_projection_drift: f64,
    pub max_coefficient_deviation: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub final_rhs_norm: f64,
    pub final_populations: Vec<f64>,
    pub steady_state: Option<SteadyState>,
    pub dyson: Option<DysonSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub diagnostics: RunDiagnostics,
}

/// Full pipeline: diagonalize, build the kernel, integrate.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let model = &config.model;
    let bog = diagonalize_bogoliubov(&build_nambu(model), model.coupled_sites())?;
    let generator = majorana_generator(model);
    let initial = initial_covariance(&config.initial_state, model.n_modes())?;
    let kernel_grid = match config.midpoint {
        MidpointRule::Interpolate => config.grid,
        MidpointRule::HalfGrid => config.grid.refined(),
    };
    let problem = DysonProblem::new(&bog, &config.spectral_density, &kernel_grid, config.steps);
    let (kernel, dyson) = match config.mode {
        Mode::Redfield => (problem.first_term(), None),
        Mode::Gme => {
            let sol = solve_dyson(&problem, config.dyson_tol, config.max_order)?;
            let summary = DysonSummary { order_reached: sol.order_reached, converged: sol.converged, deltas: sol.deltas };
            (sol.g_greater, Some(summary))
        }
    };
    drop(problem);
    let coeffs = memory_matrices(&kernel, &bog)
        .iter()
        .map(|m| lyapunov_coefficients(m, &generator))
        .collect::<Result<Vec<_>>>()?;
    drop(kernel);
    let max_dev = coeffs.iter().fold(0.0_f64, |a, c| a.max(c.deviation));
    let trajectory = match config.midpoint {
        MidpointRule::Interpolate => integrate_covariance_with(&initial, &coeffs, None, &config.grid, config.project)?,
        MidpointRule::HalfGrid => {
            let mut nodes = Vec::with_capacity(config.grid.len());
            let mut mids = Vec::with_capacity(config.grid.n_steps());
            for (i, c) in coeffs.into_iter().enumerate() {
                if i % 2 == 0 {
                    nodes.push(c);
                } else {
                    mids.push(c);
                }
            }
            integrate_covariance_with(&initial, &nodes, Some(&mids), &config.grid, config.project)?
        }
    };
    let diagnostics = RunDiagnostics {
        mode: config.mode,
        max_projection_drift: trajectory.max_projection_drift,
        max_coefficient_deviation: max_dev,
        spectrum_min: trajectory.spectrum_range.0,
        spectrum_max: trajectory.spectrum_range.1,
        final_rhs_norm: *trajectory.rhs_norms.last().unwrap_or(&0.0),
        final_populations: trajectory.final_populations().to_vec(),
        steady_state: trajectory.steady_state(config.steady_threshold, config.steady_window),
        dyson,
    };
    Ok(RunOutput { trajectory, diagnostics })
}
