//! The finite-bath oracle against many-body evolution and its own
//! discretization limits.

mod common;

use common::*;
use gme_core::fock::{self, FockEvolution};
use gme_core::model::{initial_covariance, majorana_generator};
use gme_core::oracle::{check_bath_quality, discretize_bath, exact_evolve, full_model, OracleRun};
use gme_core::{GmeError, InitialState, SpectralDensity, TimeGrid};
use ndarray::s;

#[test]
fn small_bath_matches_many_body_evolution() {
    for seed in 0..4 {
        let model = random_model(200 + seed, 2);
        let sd = SpectralDensity::new(0.8, LAMBDA).unwrap();
        let bath = discretize_bath(&sd, 2, 3.0).unwrap();
        let initial = initial_covariance(&InitialState::BellPair, 2).unwrap();
        let run = OracleRun::new(&model, &bath, &initial).unwrap();
        let full = full_model(&model, &bath).unwrap();
        let ev = FockEvolution::from_model(&full).unwrap();
        let psi = fock::bell_state(4);
        assert!(max_diff(&run.initial_full(), &fock::covariance(&psi)) < 1e-14);
        for t in [0.5, 2.0, 6.0] {
            let want = fock::covariance(&ev.evolve(&psi, t));
            let sys = want.slice(s![..4, ..4]).to_owned();
            assert!(max_diff(&run.system_covariance(t), &sys) < 1e-10);
            assert!(max_diff(&run.full_covariance(t), &want) < 1e-10);
        }
    }
}

#[test]
fn decoupled_bath_leaves_closed_dynamics() {
    let model = random_model(7, 3);
    let sd = SpectralDensity::new(0.0, LAMBDA).unwrap();
    let bath = discretize_bath(&sd, 100, 20.0).unwrap();
    let initial = initial_covariance(&InitialState::BellPair, 3).unwrap();
    let grid = TimeGrid::new(5.0, 10).unwrap();
    let states = exact_evolve(&model, &bath, &initial, &grid).unwrap();
    let gen = majorana_generator(&model);
    for (k, st) in states.iter().enumerate() {
        let want = gen.evolve_closed(initial.gamma(), grid.time(k)).unwrap();
        assert!(max_diff(st.gamma(), &want) < 1e-10);
    }
}

fn oracle_populations(gamma: f64, n_bath: usize, window: f64, grid: &TimeGrid) -> Vec<Vec<f64>> {
    let sd = SpectralDensity::new(gamma, LAMBDA).unwrap();
    let bath = discretize_bath(&sd, n_bath, window).unwrap();
    let initial = initial_covariance(&InitialState::BellPair, 2).unwrap();
    exact_evolve(&fig2(), &bath, &initial, grid).unwrap().iter().map(|s| s.populations()).collect()
}

fn max_population_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

#[test]
fn oracle_converges_in_bath_size() {
    let grid = TimeGrid::new(10.0, 50).unwrap();
    let window = 30.0 * LAMBDA;
    let coarse = oracle_populations(0.1, 300, window, &grid);
    let fine = oracle_populations(0.1, 600, window, &grid);
    let gap = max_population_gap(&coarse, &fine);
    assert!(gap < 1e-3, "N = 300 vs 600: {gap:e}");
}

#[test]
fn oracle_is_stable_under_window_growth() {
    let grid = TimeGrid::new(10.0, 50).unwrap();
    // Same level spacing, wider window.
    let narrow = oracle_populations(0.1, 400, 30.0 * LAMBDA, &grid);
    let wide = oracle_populations(0.1, 534, 40.0 * LAMBDA, &grid);
    let gap = max_population_gap(&narrow, &wide);
    assert!(gap < 2e-3, "W = 30λ vs 40λ: {gap:e}");
}

#[test]
fn reference_bath_passes_the_quality_gate() {
    let sd = SpectralDensity::new(0.1, LAMBDA).unwrap();
    let bath = discretize_bath(&sd, 400, 30.0 * LAMBDA).unwrap();
    let q = check_bath_quality(&bath, &sd, 10.0).unwrap();
    assert!(q.passed, "{q:?}");
    assert!(q.sampling_deviation <= 1e-3 * sd.correlation(0.0));
    // The finite window itself misses about 2% of the weight.
    assert!(q.lorentzian_deviation > 1e-2 && q.lorentzian_deviation <= q.truncation_bound + 1e-3);
}

#[test]
fn long_windows_hit_the_recurrence_policy() {
    let sd = SpectralDensity::new(0.1, LAMBDA).unwrap();
    let bath = discretize_bath(&sd, 100, 30.0 * LAMBDA).unwrap();
    let initial = initial_covariance(&InitialState::BellPair, 2).unwrap();
    let grid = TimeGrid::new(10.0, 10).unwrap();
    let err = exact_evolve(&fig2(), &bath, &initial, &grid).unwrap_err();
    assert!(matches!(err, GmeError::RecurrenceHorizon { .. }));
}

#[test]
fn oracle_keeps_populations_physical() {
    let grid = TimeGrid::new(10.0, 20).unwrap();
    for p in oracle_populations(0.5, 400, 45.0, &grid).iter().flatten() {
        assert!((-1e-9..=1.0 + 1e-9).contains(p));
    }
}
