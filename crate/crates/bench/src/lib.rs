//! Shared fixtures for the benchmarks in `benches/`.

use gme_core::model::{build_nambu, diagonalize_bogoliubov};
use gme_core::{BogoliubovData, DysonProblem, QuadraticModel, SpectralDensity, StepConvention, TimeGrid};

/// Two dots at `ε = (0.5, 1)`, `δ = 0.7`, both coupled.
pub fn two_dots() -> QuadraticModel {
    QuadraticModel::two_dots(0.5, 1.0, 0.7)
}

pub fn bogoliubov() -> BogoliubovData {
    let model = two_dots();
    diagonalize_bogoliubov(&build_nambu(&model), model.coupled_sites()).expect("non-degenerate spectrum")
}

/// Lorentzian bath with `λ = 1.5`.
pub fn bath(gamma: f64) -> SpectralDensity {
    SpectralDensity::new(gamma, 1.5).expect("valid bath")
}

/// Grid on `[0, 10]` with `n_steps` steps.
pub fn grid(n_steps: usize) -> TimeGrid {
    TimeGrid::new(10.0, n_steps).expect("valid grid")
}

/// Dyson problem with the separable self-energy, or the dense one when `dense`.
pub fn problem(gamma: f64, n_steps: usize, dense: bool) -> DysonProblem {
    let (bog, sd, g) = (bogoliubov(), bath(gamma), grid(n_steps));
    if dense {
        DysonProblem::dense(&bog, &sd, &g, StepConvention::default())
    } else {
        DysonProblem::new(&bog, &sd, &g, StepConvention::default())
    }
}
