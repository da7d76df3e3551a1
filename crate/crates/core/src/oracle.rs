//! Exact reference dynamics: the Lorentzian bath is replaced by `N` discrete
//! fermionic modes and the full system + bath Gaussian state is propagated
//! exactly from a single eigendecomposition of the total generator.

use std::f64::consts::PI;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{GmeError, Result};
use crate::grid::TimeGrid;
use crate::kernels::SpectralDensity;
use crate::linalg;
use crate::model::{majorana_generator, QuadraticModel};
use crate::propagator::CovarianceState;
use crate::C64;

/// Default gate on the bath correlation, relative to `c(0)`.
pub const BATH_TOLERANCE: f64 = 1e-3;

/// Bath modes on a uniform midpoint grid over `[−W, W]` with
/// `|g_r|² = J(ε_r) Δε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBath {
    energies: Vec<f64>,
    couplings: Vec<f64>,
    window: f64,
}

pub fn discretize_bath(sd: &SpectralDensity, n_modes: usize, window: f64) -> Result<DiscreteBath> {
    if n_modes < 2 {
        return Err(GmeError::InvalidParameter(format!("bath needs at least 2 modes, got {n_modes}")));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(GmeError::InvalidParameter(format!("bath window must be positive, got {window}")));
    }
    let de = 2.0 * window / n_modes as f64;
    let energies: Vec<f64> = (0..n_modes).map(|r| -window + (r as f64 + 0.5) * de).collect();
    let couplings = energies.iter().map(|&e| (sd.density(e) * de).sqrt()).collect();
    Ok(DiscreteBath { energies, couplings, window })
}

impl DiscreteBath {
    pub fn n_modes(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.window / self.n_modes() as f64
    }

    /// `sum_r |g_r|²`.
    pub fn total_weight(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }

    /// `sum_r |g_r|² e^{−iε_r t}`.
    pub fn correlation(&self, t: f64) -> C64 {
        self.energies
            .iter()
            .zip(&self.couplings)
            .map(|(&e, &g)| C64::from_polar(g * g, -e * t))
            .sum()
    }
}

/// Poincaré recurrence estimate `2π/Δε`.
pub fn recurrence_horizon(bath: &DiscreteBath) -> f64 {
    2.0 * PI / bath.spacing()
}

/// How well a discrete bath reproduces `c(t)` on `[0, t_max]`. All deviations
/// are relative to `c(0) = γλ/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathQuality {
    /// `max_t |c_N(t) − c(t)|` against the full Lorentzian.
    pub lorentzian_deviation: f64,
    /// Share of `∫J` lying outside `[−W, W]`: `1 − (2/π) arctan(W/λ)`. This
    /// much of the weight is missing at `t = 0` whatever `N` is.
    pub truncation_bound: f64,
    /// `max_t |c_N(t) − c_W(t)|` against the correlation of the window-truncated density.
    pub sampling_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Correlation of the density restricted to `[−W, W]`, by composite Simpson.
fn truncated_correlation(sd: &SpectralDensity, window: f64, t: f64, intervals: usize) -> C64 {
    let m = intervals + intervals % 2;
    let h = 2.0 * window / m as f64;
    let f = |k: usize| {
        let w = -window + k as f64 * h;
        C64::from_polar(sd.density(w), -w * t)
    };
    let mut acc = f(0) + f(m);
    for k in 1..m {
        acc += f(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

/// Samples `c_N(t)` at `samples + 1` points of `[0, t_max]`.
///
/// The gate passes when the sampling deviation is within `tolerance` and the
/// Lorentzian deviation is within `tolerance` plus the truncation bound: a
/// finite window cannot do better than that bound at `t = 0`.
pub fn bath_quality(
    bath: &DiscreteBath,
    sd: &SpectralDensity,
    t_max: f64,
    samples: usize,
    tolerance: f64,
) -> BathQuality {
    let c0 = sd.correlation(0.0);
    let truncation_bound = 1.0 - 2.0 / PI * (bath.window / sd.lambda()).atan();
    if c0 == 0.0 {
        return BathQuality {
            lorentzian_deviation: 0.0,
            truncation_bound,
            sampling_deviation: 0.0,
            tolerance,
            passed: bath.total_weight() == 0.0,
        };
    }
    let intervals = ((2.0 * bath.window * t_max / 0.02).ceil() as usize).max(20_000);
    let mut lor = 0.0_f64;
    let mut samp = 0.0_f64;
    for k in 0..=samples.max(1) {
        let t = t_max * k as f64 / samples.max(1) as f64;
        let c = bath.correlation(t);
        lor = lor.max((c - sd.correlation(t)).norm());
        samp = samp.max((c - truncated_correlation(sd, bath.window, t, intervals)).norm());
    }
    let lorentzian_deviation = lor / c0;
    let sampling_deviation = samp / c0;
    let passed = sampling_deviation <= tolerance && lorentzian_deviation <= truncation_bound + tolerance;
    BathQuality { lorentzian_deviation, truncation_bound, sampling_deviation, tolerance, passed }
}

/// [`bath_quality`] turned into an error when the gate fails.
pub fn check_bath_quality(bath: &DiscreteBath, sd: &SpectralDensity, t_max: f64) -> Result<BathQuality> {
    let q = bath_quality(bath, sd, t_max, 200, BATH_TOLERANCE);
    if !q.passed {
        return Err(GmeError::BathQuality(format!(
            "Lorentzian deviation {:.3e} (window bound {:.3e}), sampling deviation {:.3e}, tolerance {:.1e}",
            q.lorentzian_deviation, q.truncation_bound, q.sampling_deviation, q.tolerance
        )));
    }
    Ok(q)
}

/// System plus bath as one quadratic model: bath mode `r` has energy `ε_r`
/// and tunnels to every coupled site with amplitude `g_r`; pairing stays in
/// the system block.
pub fn full_model(model: &QuadraticModel, bath: &DiscreteBath) -> Result<QuadraticModel> {
    let n = model.n_modes();
    let total = n + bath.n_modes();
    let mut j = Array2::<C64>::zeros((total, total));
    let mut d = Array2::<C64>::zeros((total, total));
    j.slice_mut(s![..n, ..n]).assign(model.hopping());
    d.slice_mut(s![..n, ..n]).assign(model.pairing());
    for (r, (&e, &g)) in bath.energies().iter().zip(bath.couplings()).enumerate() {
        j[[n + r, n + r]] = C64::from(e);
        for &site in model.coupled_sites() {
            j[[site, n + r]] = C64::from(g);
            j[[n + r, site]] = C64::from(g);
        }
    }
    QuadraticModel::new(j, d, model.coupled_sites().to_vec())
}

/// Exact Gaussian evolution of system + empty bath.
///
/// With `2h = V diag(μ) V^†` the covariance propagator is
/// `O(t) = e^{−2iht} = V diag(e^{−iμt}) V^†`, real orthogonal, and
/// `Γ(t) = O Γ(0) O^T`.
#[derive(Debug, Clone)]
pub struct OracleRun {
    n_system: usize,
    n_total: usize,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<C64>,
    initial_system: Array2<C64>,
}

impl OracleRun {
    pub fn new(model: &QuadraticModel, bath: &DiscreteBath, initial: &CovarianceState) -> Result<Self> {
        let n = model.n_modes();
        if initial.n_modes() != n {
            return Err(GmeError::InvalidState(format!(
                "initial state has {} modes, model has {n}",
                initial.n_modes()
            )));
        }
        initial.validate(1e-9)?;
        let full = full_model(model, bath)?;
        let two_h = majorana_generator(&full).h().mapv(|z| z * 2.0);
        let (eigenvalues, eigenvectors) = linalg::eigh(&two_h)?;
        Ok(Self {
            n_system: n,
            n_total: full.n_modes(),
            eigenvalues,
            eigenvectors,
            initial_system: initial.gamma().clone(),
        })
    }

    pub fn n_total_modes(&self) -> usize {
        self.n_total
    }

    /// System covariance padded with the empty-bath blocks `Γ_{2r,2r+1} = i`.
    pub fn initial_full(&self) -> Array2<C64> {
        let dim = 2 * self.n_total;
        let ns = 2 * self.n_system;
        let mut g = Array2::zeros((dim, dim));
        g.slice_mut(s![..ns, ..ns]).assign(&self.initial_system);
        for r in self.n_system..self.n_total {
            g[[2 * r, 2 * r + 1]] = C64::new(0.0, 1.0);
            g[[2 * r + 1, 2 * r]] = C64::new(0.0, -1.0);
        }
        g
    }

    /// Rows `rows` of the propagator `O(t)`.
    fn propagator_rows(&self, t: f64, rows: usize) -> Array2<f64> {
        let v = &self.eigenvectors;
        let phases: Vec<C64> = self.eigenvalues.iter().map(|&mu| C64::from_polar(1.0, -mu * t)).collect();
        let mut top = v.slice(s![..rows, ..]).to_owned();
        for mut row in top.rows_mut() {
            for (z, p) in row.iter_mut().zip(&phases) {
                *z *= p;
            }
        }
        top.dot(&linalg::adjoint(v)).mapv(|z| z.re)
    }

    /// Reduced system covariance at time `t`.
    pub fn system_covariance(&self, t: f64) -> Array2<C64> {
        let ns = 2 * self.n_system;
        let r = self.propagator_rows(t, ns);
        // R Γ(0): dense system block plus the 2×2 bath blocks.
        let mut rg = Array2::<C64>::zeros(r.dim());
        let sys = r.slice(s![.., ..ns]).mapv(C64::from).dot(&self.initial_system);
        rg.slice_mut(s![.., ..ns]).assign(&sys);
        for m in self.n_system..self.n_total {
            for row in 0..ns {
                rg[[row, 2 * m]] = C64::new(0.0, -r[[row, 2 * m + 1]]);
                rg[[row, 2 * m + 1]] = C64::new(0.0, r[[row, 2 * m]]);
            }
        }
        let mut g = rg.dot(&r.t().mapv(C64::from));
        linalg::project_imag_antisymmetric(&mut g);
        g
    }

    /// Full system + bath covariance at time `t`.
    pub fn full_covariance(&self, t: f64) -> Array2<C64> {
        let o = self.propagator_rows(t, 2 * self.n_total).mapv(C64::from);
        o.dot(&self.initial_full()).dot(&o.t())
    }
}

/// Reduced system trajectory on `grid`, refusing windows beyond half the
/// recurrence time.
pub fn exact_evolve(
    model: &QuadraticModel,
    bath: &DiscreteBath,
    initial: &CovarianceState,
    grid: &TimeGrid,
) -> Result<Vec<CovarianceState>> {
    let horizon = recurrence_horizon(bath);
    if grid.t_max() >= 0.5 * horizon {
        return Err(GmeError::RecurrenceHorizon { t_max: grid.t_max(), horizon });
    }
    let run = OracleRun::new(model, bath, initial)?;
    grid.times()
        .into_iter()
        .map(|t| {
            let state = CovarianceState::new(run.system_covariance(t), t);
            state.validate(1e-8)?;
            Ok(state)
        })
        .collect()
}
