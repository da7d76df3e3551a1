//! System-side quantities against brute-force many-body evolution, plus
//! frozen values for the two-dot model computed by an independent script.

mod common;

use common::*;
use gme_core::fock::{self, FockEvolution};
use gme_core::kernels::{system_commutator, SigmaExpansion};
use gme_core::model::{initial_covariance, interaction_coefficients, majorana_generator};
use gme_core::propagator::{self, Mode, RunConfig};
use gme_core::{InitialState, QuadraticModel, SpectralDensity, TimeGrid, C64};
use ndarray::{array, Array2};
use ndarray_linalg::{EigValsh, UPLO};

fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

/// Coupling operators `(A^†, A)` in the Heisenberg picture at time `t`.
fn heisenberg_couplings(model: &QuadraticModel, t: f64) -> [Array2<C64>; 2] {
    let ev = FockEvolution::from_model(model).unwrap();
    let a = fock_coupling(model);
    [ev.heisenberg(&adjoint(&a), t), ev.heisenberg(&a, t)]
}

fn models() -> Vec<QuadraticModel> {
    let mut out = vec![fig2()];
    out.extend((0..6).map(|s| random_model(100 + s, 2 + (s as usize % 2))));
    out
}

#[test]
fn quasiparticle_energies_reproduce_many_body_spectrum() {
    for model in models() {
        let n = model.n_modes();
        let bog = bogoliubov(&model);
        let ev = fock::hamiltonian(&model).eigvalsh(UPLO::Lower).unwrap();
        let e0 = ev[0];
        let mut predicted: Vec<f64> = (0..1usize << n)
            .map(|s| e0 + (0..n).filter(|k| s & (1 << k) != 0).map(|k| bog.energies()[k]).sum::<f64>())
            .collect();
        predicted.sort_by(f64::total_cmp);
        for (p, e) in predicted.iter().zip(&ev) {
            assert!((p - e).abs() < 1e-10, "{p} vs {e}");
        }
    }
}

#[test]
fn frozen_quasiparticle_energies() {
    let bog = fig2_bog();
    let want = [0.7759142264341596, 1.2759142264341594];
    for (w, e) in want.iter().zip(bog.energies()) {
        assert!((w - e).abs() < 1e-13);
    }
}

#[test]
fn commutator_matches_heisenberg_anticommutator() {
    let (tau, s) = (1.0, 0.5);
    for model in models() {
        let bog = bogoliubov(&model);
        let at = heisenberg_couplings(&model, tau);
        let as_ = heisenberg_couplings(&model, s);
        let sigma = SigmaExpansion::from_bogoliubov(&bog).value(tau - s);
        for a in 0..2 {
            for b in 0..2 {
                let ac = anticommutator(&at[a], &as_[b]);
                let c = normalized_trace(&ac);
                // A c-number: the anticommutator is proportional to the identity.
                let dim = ac.nrows();
                let rest = &ac - &Array2::<C64>::eye(dim).mapv(|z| z * c);
                assert!(max_abs(&rest) < 1e-11);
                assert!((sigma[a][b] - c).norm() < 1e-11, "{a}{b}: {} vs {c}", sigma[a][b]);
            }
        }
    }
}

#[test]
fn frozen_commutator() {
    let g = TimeGrid::new(1.0, 2).unwrap();
    let sigma = system_commutator(&fig2_bog(), &g);
    let want = [
        [C64::new(0.08349509681056488, 0.0), C64::new(1.7289978971870743, 0.7119409101397551)],
        [C64::new(1.7289978971870743, -0.7119409101397551), C64::new(0.08349509681056488, 0.0)],
    ];
    let got = sigma.matrix(2, 1);
    for a in 0..2 {
        for b in 0..2 {
            assert!((got[a][b] - want[a][b]).norm() < 1e-13, "{a}{b}: {}", got[a][b]);
        }
    }
}

#[test]
fn interaction_coefficients_expand_heisenberg_operators() {
    for model in models() {
        let bog = bogoliubov(&model);
        let w = fock::majoranas(model.n_modes());
        for t in [0.0, 0.7, 2.3] {
            let coeff = interaction_coefficients(&bog, t);
            let ops = heisenberg_couplings(&model, t);
            for a in 0..2 {
                for (j, wj) in w.iter().enumerate() {
                    let c = normalized_trace(&anticommutator(&ops[a], wj));
                    assert!((coeff[[a, j]] - c).norm() < 1e-11);
                }
            }
        }
    }
}

#[test]
fn frozen_interaction_coefficients() {
    let coeff = interaction_coefficients(&fig2_bog(), 1.0);
    let row0 = [
        C64::new(0.5665632022765204, -0.06211941632449057),
        C64::new(0.7374355290071497, -0.3624033064137588),
        C64::new(0.34782045670927575, 0.9187854291798194),
        C64::new(0.11923048384817914, -0.1436605608465142),
    ];
    for (j, z) in row0.iter().enumerate() {
        assert!((coeff[[0, j]] - z).norm() < 1e-13);
        assert!((coeff[[1, j]] - z.conj()).norm() < 1e-13);
    }
}

#[test]
fn bell_covariance_matches_fock_state() {
    for n in 2..=4 {
        let g = initial_covariance(&InitialState::BellPair, n).unwrap();
        let want = fock::covariance(&fock::bell_state(n));
        assert!(max_diff(g.gamma(), &want) < 1e-14);
    }
    let i = C64::new(0.0, 1.0);
    let frozen: Array2<C64> = array![
        [0.0.into(), 0.0.into(), 0.0.into(), i],
        [0.0.into(), 0.0.into(), i, 0.0.into()],
        [0.0.into(), -i, 0.0.into(), 0.0.into()],
        [-i, 0.0.into(), 0.0.into(), 0.0.into()],
    ];
    let g = initial_covariance(&InitialState::BellPair, 2).unwrap();
    assert!(max_diff(g.gamma(), &frozen) < 1e-15);
}

#[test]
fn closed_covariance_flow_matches_fock_evolution() {
    for model in models() {
        let n = model.n_modes();
        let generator = majorana_generator(&model);
        let ev = FockEvolution::from_model(&model).unwrap();
        let psi = fock::bell_state(n);
        let g0 = fock::covariance(&psi);
        for t in [0.3, 1.0, 4.0, 10.0] {
            let want = fock::covariance(&ev.evolve(&psi, t));
            let got = generator.evolve_closed(&g0, t).unwrap();
            assert!(max_diff(&got, &want) < 1e-10, "t = {t}: {:e}", max_diff(&got, &want));
        }
    }
}

#[test]
fn decoupled_runs_follow_fock_evolution() {
    for model in models().into_iter().take(3) {
        let n = model.n_modes();
        let ev = FockEvolution::from_model(&model).unwrap();
        let psi = fock::bell_state(n);
        let grid = TimeGrid::new(5.0, 500).unwrap();
        for mode in [Mode::Gme, Mode::Redfield] {
            let cfg = RunConfig::new(model.clone(), SpectralDensity::new(0.0, LAMBDA).unwrap(), grid).with_mode(mode);
            let out = propagator::run(&cfg).unwrap();
            for k in (0..grid.len()).step_by(50) {
                let want = fock::covariance(&ev.evolve(&psi, grid.time(k)));
                let d = max_diff(&out.trajectory.states[k], &want);
                assert!(d < 1e-6, "{:?} t = {}: {d:e}", mode, grid.time(k));
                let pops = fock::populations(&ev.evolve(&psi, grid.time(k)));
                for (p, q) in pops.iter().zip(&out.trajectory.populations[k]) {
                    assert!((p - q).abs() < 1e-6);
                }
            }
        }
    }
}
