//! Helpers shared by the integration tests: random models, many-body
//! references and the invariant checks run over randomized inputs.

#![allow(dead_code)]

use gme_core::dyson::{compose, fixed_point_residual, solve_dyson, DysonProblem};
use gme_core::fock;
use gme_core::kernels::{
    effective_conjugate, keldysh_components, system_commutator, Support, TwoTimeKernel,
};
use gme_core::model::{build_nambu, diagonalize_bogoliubov};
use gme_core::propagator::{self, Mode, RunConfig};
use gme_core::{
    BogoliubovData, InitialState, QuadraticModel, SpectralDensity, StepConvention, TimeGrid, C64,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LAMBDA: f64 = 1.5;

pub fn fig2() -> QuadraticModel {
    QuadraticModel::two_dots(0.5, 1.0, 0.7)
}

pub fn fig2_bog() -> BogoliubovData {
    diagonalize_bogoliubov(&build_nambu(&fig2()), &[0, 1]).unwrap()
}

pub fn bogoliubov(model: &QuadraticModel) -> BogoliubovData {
    diagonalize_bogoliubov(&build_nambu(model), model.coupled_sites()).unwrap()
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    max_abs(&(a - b))
}

fn uniform_c64(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

/// A random valid model with a gapped quasiparticle spectrum (`ω_min ≥ 0.1`).
pub fn random_model(seed: u64, n_modes: usize) -> QuadraticModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut j = Array2::<C64>::zeros((n_modes, n_modes));
        let mut d = Array2::<C64>::zeros((n_modes, n_modes));
        for a in 0..n_modes {
            j[[a, a]] = C64::from(rng.gen_range(0.2..1.5));
            for b in a + 1..n_modes {
                let z = uniform_c64(&mut rng, 0.6);
                j[[a, b]] = z;
                j[[b, a]] = z.conj();
                let p = uniform_c64(&mut rng, 0.6);
                d[[a, b]] = p;
                d[[b, a]] = -p;
            }
        }
        let mut sites: Vec<usize> = (0..n_modes).filter(|_| rng.gen_bool(0.6)).collect();
        if sites.is_empty() {
            sites.push(rng.gen_range(0..n_modes));
        }
        let model = QuadraticModel::new(j, d, sites).unwrap();
        if let Ok(bog) = diagonalize_bogoliubov(&build_nambu(&model), model.coupled_sites()) {
            if bog.energies()[0] >= 0.1 {
                return model;
            }
        }
    }
}

/// The coupling operator `A = sum_{i ∈ I} a_i` as a Fock-space matrix.
pub fn fock_coupling(model: &QuadraticModel) -> Array2<C64> {
    let a = fock::annihilators(model.n_modes());
    let dim = 1 << model.n_modes();
    let mut out = Array2::zeros((dim, dim));
    for &s in model.coupled_sites() {
        out += &a[s];
    }
    out
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// `Tr(X)/dim`, the coefficient of the identity.
pub fn normalized_trace(m: &Array2<C64>) -> C64 {
    m.diag().sum() / m.nrows() as f64
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random kernel with every component populated.
pub fn random_kernel(seed: u64, grid: TimeGrid) -> TwoTimeKernel {
    let mut r = rng(seed);
    TwoTimeKernel::from_fn(grid, Support::Full, |_, _| {
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for row in m.iter_mut() {
            for z in row.iter_mut() {
                *z = uniform_c64(&mut r, 1.0);
            }
        }
        m
    })
}

/// Smooth kernel `f(τ, s)` with random frequencies and amplitudes.
pub fn smooth_kernel(seed: u64, grid: TimeGrid) -> TwoTimeKernel {
    let mut r = rng(seed);
    let params: Vec<(C64, f64, f64)> =
        (0..4).map(|_| (uniform_c64(&mut r, 1.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0))).collect();
    TwoTimeKernel::from_fn(grid, Support::Full, |i, j| {
        let (t, s) = (grid.time(i), grid.time(j));
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for (c, (amp, f1, f2)) in params.iter().enumerate() {
            m[c / 2][c % 2] = amp * C64::from_polar(1.0, f1 * t + f2 * s);
        }
        m
    })
}

/// Outcome of one randomized invariant check.
pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `σ_αβ(τ, s) = σ_βα(s, τ)`.
pub fn check_sigma_exchange(bog: &BogoliubovData, grid: &TimeGrid) -> Check {
    let sigma = system_commutator(bog, grid);
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let a = sigma.matrix(i, j);
            let b = sigma.matrix(j, i);
            for al in 0..2 {
                for be in 0..2 {
                    worst = worst.max((a[al][be] - b[be][al]).norm());
                }
            }
        }
    }
    ensure(worst < 1e-12, || format!("sigma exchange defect {worst:e}"))
}

/// `[[F]^c]^c = F` for a random kernel.
pub fn check_conjugate_involution(seed: u64, grid: TimeGrid) -> Check {
    let f = random_kernel(seed, grid);
    let back = effective_conjugate(&effective_conjugate(&f, -1.0), -1.0);
    let d = back.max_abs_diff(&f).map_err(|e| e.to_string())?;
    ensure(d == 0.0, || format!("conjugate involution defect {d:e}"))
}

/// `𝒞^<_αβ(τ, s) = ζ 𝒞^>_βα(s, τ)` for a random correlation kernel.
pub fn check_lesser_relation(seed: u64, grid: TimeGrid) -> Check {
    let c = random_kernel(seed, grid);
    let k = keldysh_components(&c, -1.0, 0.5);
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            for a in 0..2 {
                for b in 0..2 {
                    worst = worst.max((k.lesser.value(a, b, i, j) + c.value(b, a, j, i)).norm());
                }
            }
        }
    }
    ensure(worst == 0.0, || format!("lesser relation defect {worst:e}"))
}

/// Dyson sum satisfies the single-kernel equation to within `10 × tol`.
pub fn check_dyson_residual(bog: &BogoliubovData, sd: &SpectralDensity, grid: &TimeGrid, tol: f64) -> Check {
    let p = DysonProblem::new(bog, sd, grid, StepConvention::default());
    let sol = solve_dyson(&p, tol, 80).map_err(|e| e.to_string())?;
    if !sol.converged {
        return Err(format!("series did not converge, deltas {:?}", sol.deltas));
    }
    let r = fixed_point_residual(&sol.g_greater, &p).map_err(|e| e.to_string())?;
    ensure(r <= 10.0 * tol, || format!("fixed-point residual {r:e} > {:e}", 10.0 * tol))
}

/// Structure preservation and physicality along a GME run from the Bell pair.
pub fn check_trajectory(model: &QuadraticModel, sd: &SpectralDensity, grid: &TimeGrid) -> Check {
    let mut cfg = RunConfig::new(model.clone(), *sd, *grid).with_mode(Mode::Gme);
    cfg.initial_state = if model.n_modes() >= 2 { InitialState::BellPair } else { InitialState::FullyOccupied };
    let out = propagator::run(&cfg).map_err(|e| e.to_string())?;
    for (k, g) in out.trajectory.states.iter().enumerate() {
        let t = g + &g.t();
        let c = g + &g.mapv(|z| z.conj());
        let d = max_abs(&t).max(max_abs(&c));
        if d > 1e-8 {
            return Err(format!("structure defect {d:e} at step {k}"));
        }
    }
    let (lo, hi) = out.trajectory.spectrum_range;
    ensure(lo >= -1.0 - 1e-6 && hi <= 1.0 + 1e-6, || format!("spectrum range [{lo}, {hi}]"))?;
    Ok(())
}

/// Trapezoid composition of smooth kernels converges at second order.
///
/// Returns the observed error ratio between successive halvings, measured on
/// the coarse grid points shared by all three resolutions.
pub fn composition_error_ratio(seed: u64, t_max: f64, n: usize) -> Result<f64, String> {
    let values = |steps: usize| -> Result<TwoTimeKernel, String> {
        let g = TimeGrid::new(t_max, steps).map_err(|e| e.to_string())?;
        let x = smooth_kernel(seed, g);
        let s = smooth_kernel(seed + 1, g);
        let z = smooth_kernel(seed + 2, g);
        let r = compose(&x, &s, &z).map_err(|e| e.to_string())?;
        r.subsample(steps / n).map_err(|e| e.to_string())
    };
    let r1 = values(n)?;
    let r2 = values(2 * n)?;
    let r4 = values(4 * n)?;
    let e1 = r1.max_abs_diff(&r2).map_err(|e| e.to_string())?;
    let e2 = r2.max_abs_diff(&r4).map_err(|e| e.to_string())?;
    Ok(e1 / e2)
}

/// Every randomized invariant for one seed.
pub fn invariant_suite(seed: u64) -> Check {
    let mut r = rng(seed ^ 0x5eed);
    let n_modes = if r.gen_bool(0.5) { 2 } else { 3 };
    let model = random_model(seed, n_modes);
    let bog = bogoliubov(&model);
    let gamma = r.gen_range(0.02..0.15);
    let sd = SpectralDensity::new(gamma, LAMBDA).map_err(|e| e.to_string())?;
    let small = TimeGrid::new(1.0, 10).map_err(|e| e.to_string())?;
    let grid = TimeGrid::new(3.0, 60).map_err(|e| e.to_string())?;
    // RK4 is not exactly orthogonal; keep ω dt small for the physicality bound.
    let fine = TimeGrid::new(3.0, 300).map_err(|e| e.to_string())?;
    check_sigma_exchange(&bog, &small).map_err(|e| format!("sigma exchange: {e}"))?;
    check_conjugate_involution(seed, small).map_err(|e| format!("conjugate: {e}"))?;
    check_lesser_relation(seed, small).map_err(|e| format!("lesser: {e}"))?;
    check_dyson_residual(&bog, &sd, &grid, 1e-8).map_err(|e| format!("dyson: {e}"))?;
    check_trajectory(&model, &sd, &fine).map_err(|e| format!("trajectory: {e}"))?;
    let ratio = composition_error_ratio(seed, 2.0, 8)?;
    ensure((3.0..=5.0).contains(&ratio), || format!("quadrature refinement ratio {ratio}"))
}
