//! Quadratic system Hamiltonians and their basis transformations.
//!
//! A system of `n` fermionic modes is described by
//!
//! ```text
//! H_S = sum_{nm} [ J_nm a_n^† a_m + ½ Δ_nm a_n^† a_m^† − ½ Δ*_nm a_n a_m ]
//! ```
//!
//! with `J` Hermitian and `Δ` antisymmetric. The environment couples through
//! `A = sum_{n in I} a_n` and its adjoint.
//!
//! Majorana operators are ordered as `w_{2n} = (a_n^† + a_n)/√2`,
//! `w_{2n+1} = i(a_n^† − a_n)/√2` (zero-based), so that `{w_i, w_j} = δ_ij`.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{GmeError, Result};
use crate::linalg;
use crate::propagator::CovarianceState;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance below which a quasiparticle energy counts as a zero mode.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Scale applied to the textbook `2i [[..]]` block formula for the Majorana
/// generator. Fixed by matching the closed-system covariance flow to exact
/// Fock-space evolution.
pub const GENERATOR_SCALE: f64 = 0.25;

/// Exchange statistics of the particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    /// The sign `ζ` picked up under exchange: `+1` for bosons, `−1` for fermions.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Boson => 1.0,
            Statistics::Fermion => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    hopping: Array2<C64>,
    pairing: Array2<C64>,
    coupled_sites: Vec<usize>,
}

impl QuadraticModel {
    /// `coupled_sites` are zero-based mode indices.
    pub fn new(hopping: Array2<C64>, pairing: Array2<C64>, coupled_sites: Vec<usize>) -> Result<Self> {
        let n = hopping.nrows();
        if n == 0 || hopping.ncols() != n {
            return Err(GmeError::InvalidModel(format!(
                "hopping matrix must be square and non-empty, got {:?}",
                hopping.dim()
            )));
        }
        if pairing.dim() != (n, n) {
            return Err(GmeError::InvalidModel(format!(
                "pairing matrix has shape {:?}, expected ({n}, {n})",
                pairing.dim()
            )));
        }
        let scale = linalg::max_abs(&hopping).max(linalg::max_abs(&pairing)).max(1.0);
        let herm = linalg::hermiticity_defect(&hopping);
        if herm > 1e-12 * scale {
            return Err(GmeError::InvalidModel(format!("hopping is not Hermitian (defect {herm:e})")));
        }
        let anti = (&pairing + &pairing.t()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if anti > 1e-12 * scale {
            return Err(GmeError::InvalidModel(format!(
                "pairing is not antisymmetric (defect {anti:e})"
            )));
        }
        if coupled_sites.is_empty() {
            return Err(GmeError::InvalidModel("coupled site set is empty".into()));
        }
        let mut sorted = coupled_sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != coupled_sites.len() {
            return Err(GmeError::InvalidModel("coupled sites contain duplicates".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&s| s >= n) {
            return Err(GmeError::InvalidModel(format!(
                "coupled site {bad} is out of range for {n} modes"
            )));
        }
        Ok(Self { hopping, pairing, coupled_sites: sorted })
    }

    /// Two dots with on-site energies `eps1`, `eps2` and pairing
    /// `delta (a_1^† a_2^† − a_1 a_2)`, both coupled to the bath.
    pub fn two_dots(eps1: f64, eps2: f64, delta: f64) -> Self {
        let mut hopping = Array2::zeros((2, 2));
        hopping[[0, 0]] = C64::from(eps1);
        hopping[[1, 1]] = C64::from(eps2);
        let mut pairing = Array2::zeros((2, 2));
        pairing[[0, 1]] = C64::from(delta);
        pairing[[1, 0]] = C64::from(-delta);
        Self { hopping, pairing, coupled_sites: vec![0, 1] }
    }

    pub fn n_modes(&self) -> usize {
        self.hopping.nrows()
    }

    pub fn hopping(&self) -> &Array2<C64> {
        &self.hopping
    }

    pub fn pairing(&self) -> &Array2<C64> {
        &self.pairing
    }

    pub fn coupled_sites(&self) -> &[usize] {
        &self.coupled_sites
    }

    /// Only the fermionic pipeline is implemented.
    pub fn statistics(&self) -> Statistics {
        Statistics::Fermion
    }
}

/// Bogoliubov–de Gennes matrix `[[J, Δ], [Δ^†, −J^T]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NambuMatrix {
    matrix: Array2<C64>,
}

impl NambuMatrix {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        linalg::eigvalsh(&self.matrix)
    }
}

pub fn build_nambu(model: &QuadraticModel) -> NambuMatrix {
    let n = model.n_modes();
    let mut m = Array2::zeros((2 * n, 2 * n));
    m.slice_mut(s![..n, ..n]).assign(&model.hopping);
    m.slice_mut(s![..n, n..]).assign(&model.pairing);
    m.slice_mut(s![n.., ..n]).assign(&linalg::adjoint(&model.pairing));
    m.slice_mut(s![n.., n..]).assign(&model.hopping.t().mapv(|z| -z));
    NambuMatrix { matrix: m }
}

/// Result of diagonalizing the Nambu matrix.
///
/// `a_n = sum_k [u_nk b_k + v_nk b_k^†]`, `H_S = sum_k ω_k b_k^† b_k + E_0`, and
/// the coupling operator is `A = sum_k [φ_k b_k + χ_k b_k^†]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovData {
    energies: Array1<f64>,
    u: Array2<C64>,
    v: Array2<C64>,
    particle_coupling: Array1<C64>,
    hole_coupling: Array1<C64>,
    coupled_sites: Vec<usize>,
}

pub fn diagonalize_bogoliubov(nambu: &NambuMatrix, coupled_sites: &[usize]) -> Result<BogoliubovData> {
    diagonalize_bogoliubov_with_tolerance(nambu, coupled_sites, DEGENERACY_TOLERANCE)
}

pub fn diagonalize_bogoliubov_with_tolerance(
    nambu: &NambuMatrix,
    coupled_sites: &[usize],
    relative_tolerance: f64,
) -> Result<BogoliubovData> {
    let n = nambu.n_modes();
    if coupled_sites.iter().any(|&s| s >= n) {
        return Err(GmeError::InvalidModel("coupled site out of range".into()));
    }
    let (evals, evecs) = linalg::eigh(&nambu.matrix)?;
    if evals.iter().any(|e| !e.is_finite()) {
        return Err(GmeError::Eigen("non-finite eigenvalue".into()));
    }
    let radius = evals.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let tolerance = relative_tolerance * radius.max(f64::MIN_POSITIVE);
    // Ascending order: the upper half holds the non-negative branch.
    for k in 0..n {
        let pair = evals[n - 1 - k] + evals[n + k];
        if pair.abs() > 1e-8 * radius.max(1.0) {
            return Err(GmeError::Consistency(format!(
                "Nambu spectrum is not symmetric: {} vs {}",
                evals[n - 1 - k],
                evals[n + k]
            )));
        }
    }
    if evals[n] < tolerance {
        return Err(GmeError::DegenerateSpectrum { energy: evals[n], tolerance });
    }

    let mut energies = Array1::zeros(n);
    let mut u = Array2::zeros((n, n));
    let mut v = Array2::zeros((n, n));
    for k in 0..n {
        let mut col = evecs.column(n + k).to_owned();
        fix_phase(&mut col);
        energies[k] = evals[n + k];
        for m in 0..n {
            u[[m, k]] = col[m];
            v[[m, k]] = col[n + m].conj();
        }
    }
    Ok(BogoliubovData::from_blocks(energies, u, v, coupled_sites.to_vec()))
}

/// Rotates the vector so that its largest-magnitude entry is real and positive.
fn fix_phase(col: &mut Array1<C64>) {
    let max = col.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let pivot = col
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let phase = col[pivot].conj() / col[pivot].norm();
    col.mapv_inplace(|z| z * phase);
}

impl BogoliubovData {
    fn from_blocks(energies: Array1<f64>, u: Array2<C64>, v: Array2<C64>, coupled_sites: Vec<usize>) -> Self {
        let n = energies.len();
        let mut particle = Array1::zeros(n);
        let mut hole = Array1::zeros(n);
        for k in 0..n {
            for &site in &coupled_sites {
                particle[k] += u[[site, k]];
                hole[k] += v[[site, k]];
            }
        }
        Self { energies, u, v, particle_coupling: particle, hole_coupling: hole, coupled_sites }
    }

    pub fn n_modes(&self) -> usize {
        self.energies.len()
    }

    /// Quasiparticle energies `ω_k`, ascending and non-negative.
    pub fn energies(&self) -> &Array1<f64> {
        &self.energies
    }

    /// Particle block `𝒜`.
    pub fn u(&self) -> &Array2<C64> {
        &self.u
    }

    /// Hole block `ℬ`.
    pub fn v(&self) -> &Array2<C64> {
        &self.v
    }

    /// `Φ = 𝒜 + ℬ*`.
    pub fn u_plus_v_conj(&self) -> Array2<C64> {
        &self.u + &linalg::conj(&self.v)
    }

    /// `Ψ = 𝒜 − ℬ*`.
    pub fn u_minus_v_conj(&self) -> Array2<C64> {
        &self.u - &linalg::conj(&self.v)
    }

    /// `φ_k`: amplitude of `b_k` in the coupling operator `A`.
    pub fn particle_coupling(&self) -> &Array1<C64> {
        &self.particle_coupling
    }

    /// `χ_k`: amplitude of `b_k^†` in the coupling operator `A`.
    pub fn hole_coupling(&self) -> &Array1<C64> {
        &self.hole_coupling
    }

    pub fn coupled_sites(&self) -> &[usize] {
        &self.coupled_sites
    }

    /// The full transformation `U = [[𝒜, ℬ], [ℬ*, 𝒜*]]`.
    pub fn unitary(&self) -> Array2<C64> {
        let n = self.n_modes();
        let mut m = Array2::zeros((2 * n, 2 * n));
        m.slice_mut(s![..n, ..n]).assign(&self.u);
        m.slice_mut(s![..n, n..]).assign(&self.v);
        m.slice_mut(s![n.., ..n]).assign(&linalg::conj(&self.v));
        m.slice_mut(s![n.., n..]).assign(&linalg::conj(&self.u));
        m
    }

    /// `sum_k (|φ_k|² + |χ_k|²)`, equal to `{A, A^†}` and hence `|I|`.
    pub fn anticommutator_sum(&self) -> f64 {
        self.particle_coupling
            .iter()
            .zip(self.hole_coupling.iter())
            .map(|(p, h)| p.norm_sqr() + h.norm_sqr())
            .sum()
    }

    /// Gauge transform `b_k -> e^{-i θ_k} b_k`. Physical quantities must not change.
    pub fn regauged(&self, phases: &[f64]) -> Self {
        assert_eq!(phases.len(), self.n_modes());
        let mut u = self.u.clone();
        let mut v = self.v.clone();
        for (k, &theta) in phases.iter().enumerate() {
            let p = C64::from_polar(1.0, theta);
            u.column_mut(k).mapv_inplace(|z| z * p);
            v.column_mut(k).mapv_inplace(|z| z * p.conj());
        }
        Self::from_blocks(self.energies.clone(), u, v, self.coupled_sites.clone())
    }
}

/// Quadratic generator `H_S = sum_ij h_ij w_i w_j + const` in the Majorana basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MajoranaGenerator {
    h: Array2<C64>,
    structure: Array2<C64>,
}

impl MajoranaGenerator {
    /// `h`, pure imaginary and antisymmetric.
    pub fn h(&self) -> &Array2<C64> {
        &self.h
    }

    /// The (anti)commutator structure matrix `Ω`; the identity for fermions.
    pub fn structure(&self) -> &Array2<C64> {
        &self.structure
    }

    /// The closed-system drift `−2iΩh`, real and antisymmetric.
    pub fn drift(&self) -> Array2<f64> {
        self.structure.dot(&self.h).mapv(|z| (-2.0 * I * z).re)
    }

    /// Exact closed-system covariance `e^{Xt} Γ e^{X^T t}` with `X = −2ih`.
    pub fn evolve_closed(&self, gamma: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
        let (mu, v) = linalg::eigh(&self.h.mapv(|z| z * 2.0))?;
        let mut scaled = v.clone();
        for (mut col, &m) in scaled.columns_mut().into_iter().zip(mu.iter()) {
            col.mapv_inplace(|z| z * C64::from_polar(1.0, -m * t));
        }
        let o = scaled.dot(&linalg::adjoint(&v)).mapv(|z| C64::from(z.re));
        let mut out = o.dot(gamma).dot(&o.t());
        linalg::project_imag_antisymmetric(&mut out);
        Ok(out)
    }
}

pub fn majorana_generator(model: &QuadraticModel) -> MajoranaGenerator {
    let n = model.n_modes();
    let mut h = Array2::zeros((2 * n, 2 * n));
    let pref = 2.0 * I * GENERATOR_SCALE;
    for a in 0..n {
        for b in 0..n {
            let j = model.hopping[[a, b]];
            let d = model.pairing[[a, b]];
            h[[2 * a, 2 * b]] = pref * (j.im + d.im);
            h[[2 * a, 2 * b + 1]] = pref * (j.re - d.re);
            h[[2 * a + 1, 2 * b]] = pref * (-j.re - d.re);
            h[[2 * a + 1, 2 * b + 1]] = pref * (j.im - d.im);
        }
    }
    MajoranaGenerator { h, structure: Array2::eye(2 * n) }
}

/// Majorana coefficients of the interaction-picture coupling operators:
/// row 0 expands `A^†(t)`, row 1 expands `A(t)`, so that
/// `A_α(t) = sum_j 𝔸_{αj}(t) w_j`.
pub fn interaction_coefficients(bog: &BogoliubovData, t: f64) -> Array2<C64> {
    let n = bog.n_modes();
    let big_phi = bog.u_plus_v_conj();
    let big_psi = bog.u_minus_v_conj();
    let phase: Vec<(C64, C64)> = bog
        .energies
        .iter()
        .map(|&w| (C64::from_polar(1.0, -w * t), C64::from_polar(1.0, w * t)))
        .collect();
    let mut out = Array2::zeros((2, 2 * n));
    for m in 0..n {
        let mut x = C64::new(0.0, 0.0);
        let mut y = C64::new(0.0, 0.0);
        for k in 0..n {
            let (em, ep) = phase[k];
            let phi_c = bog.particle_coupling[k].conj();
            let chi_c = bog.hole_coupling[k].conj();
            x += big_phi[[m, k]].conj() * chi_c * em + big_phi[[m, k]] * phi_c * ep;
            y += big_psi[[m, k]].conj() * chi_c * em - big_psi[[m, k]] * phi_c * ep;
        }
        out[[0, 2 * m]] = x * FRAC_1_SQRT_2;
        out[[0, 2 * m + 1]] = I * y * FRAC_1_SQRT_2;
        out[[1, 2 * m]] = out[[0, 2 * m]].conj();
        out[[1, 2 * m + 1]] = out[[0, 2 * m + 1]].conj();
    }
    out
}

/// Initial system state.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Vacuum,
    FullyOccupied,
    /// `(|00⟩ + |11⟩)/√2` on modes 0 and 1; any further modes empty.
    BellPair,
    Explicit(Array2<C64>),
}

pub fn initial_covariance(state: &InitialState, n_modes: usize) -> Result<CovarianceState> {
    if n_modes == 0 {
        return Err(GmeError::InvalidState("no modes".into()));
    }
    let zero = || Array2::<C64>::zeros((n_modes, n_modes));
    let gamma = match state {
        InitialState::Vacuum => covariance_from_correlations(&zero(), &zero()),
        InitialState::FullyOccupied => covariance_from_correlations(&Array2::eye(n_modes), &zero()),
        InitialState::BellPair => {
            if n_modes < 2 {
                return Err(GmeError::InvalidState("a Bell pair needs at least two modes".into()));
            }
            let mut occ = zero();
            occ[[0, 0]] = C64::from(0.5);
            occ[[1, 1]] = C64::from(0.5);
            // ⟨a_1 a_2⟩ = −½ for (|00⟩ + a_1^† a_2^† |00⟩)/√2.
            let mut anom = zero();
            anom[[0, 1]] = C64::from(-0.5);
            anom[[1, 0]] = C64::from(0.5);
            covariance_from_correlations(&occ, &anom)
        }
        InitialState::Explicit(m) => {
            if m.dim() != (2 * n_modes, 2 * n_modes) {
                return Err(GmeError::InvalidState(format!(
                    "explicit covariance has shape {:?}, expected ({}, {})",
                    m.dim(),
                    2 * n_modes,
                    2 * n_modes
                )));
            }
            m.clone()
        }
    };
    CovarianceState::new(gamma.clone(), 0.0).validate(1e-9)?;
    // Remove rounding left over from the basis change.
    let mut gamma = gamma;
    linalg::project_imag_antisymmetric(&mut gamma);
    Ok(CovarianceState::new(gamma, 0.0))
}

/// Majorana covariance `Γ_kq = ⟨w_k w_q − w_q w_k⟩` from the normal
/// correlations `C_ij = ⟨a_i^† a_j⟩` and anomalous correlations `F_ij = ⟨a_i a_j⟩`.
pub fn covariance_from_correlations(normal: &Array2<C64>, anomalous: &Array2<C64>) -> Array2<C64> {
    let n = normal.nrows();
    // G_ab = ⟨ψ_a ψ_b⟩ with ψ = (a_1..a_n, a_1^†..a_n^†).
    let mut g = Array2::<C64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            g[[i, j]] = anomalous[[i, j]];
            g[[i, n + j]] = if i == j { C64::from(1.0) } else { C64::from(0.0) } - normal[[j, i]];
            g[[n + i, j]] = normal[[i, j]];
            g[[n + i, n + j]] = anomalous[[j, i]].conj();
        }
    }
    let t = majorana_transform(n);
    let mut gamma = t.dot(&g).dot(&t.t()).mapv(|z| 2.0 * z);
    for i in 0..2 * n {
        gamma[[i, i]] -= C64::from(1.0);
    }
    gamma
}

/// `w = T ψ` with `ψ = (a_1..a_n, a_1^†..a_n^†)`.
fn majorana_transform(n: usize) -> Array2<C64> {
    let mut t = Array2::zeros((2 * n, 2 * n));
    let r = C64::from(FRAC_1_SQRT_2);
    for k in 0..n {
        t[[2 * k, k]] = r;
        t[[2 * k, n + k]] = r;
        t[[2 * k + 1, k]] = -I * r;
        t[[2 * k + 1, n + k]] = I * r;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig2() -> QuadraticModel {
        QuadraticModel::two_dots(0.5, 1.0, 0.7)
    }

    #[test]
    fn rejects_invalid_models() {
        let j = Array2::from_shape_vec((2, 2), vec![C64::from(1.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::from(1.0)]).unwrap();
        assert!(matches!(
            QuadraticModel::new(j, Array2::zeros((2, 2)), vec![0]),
            Err(GmeError::InvalidModel(_))
        ));
        let sym = Array2::from_elem((2, 2), C64::from(1.0));
        assert!(QuadraticModel::new(Array2::eye(2), sym, vec![0]).is_err());
        assert!(QuadraticModel::new(Array2::eye(2), Array2::zeros((3, 3)), vec![0]).is_err());
        assert!(QuadraticModel::new(Array2::eye(2), Array2::zeros((2, 2)), vec![]).is_err());
        assert!(QuadraticModel::new(Array2::eye(2), Array2::zeros((2, 2)), vec![2]).is_err());
    }

    #[test]
    fn decoupled_nambu_spectrum() {
        let mut j = Array2::zeros((2, 2));
        j[[0, 0]] = C64::from(0.5);
        j[[1, 1]] = C64::from(1.0);
        let model = QuadraticModel::new(j, Array2::zeros((2, 2)), vec![0, 1]).unwrap();
        let ev = build_nambu(&model).eigenvalues().unwrap();
        for (got, want) in ev.iter().zip([-1.0, -0.5, 0.5, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn nambu_is_hermitian_with_paired_spectrum() {
        let nambu = build_nambu(&fig2());
        assert!(linalg::hermiticity_defect(nambu.matrix()) < 1e-15);
        let ev = nambu.eigenvalues().unwrap();
        for k in 0..ev.len() {
            assert_abs_diff_eq!(ev[k], -ev[ev.len() - 1 - k], epsilon = 1e-12);
        }
    }

    #[test]
    fn no_pairing_means_no_mixing() {
        let model = QuadraticModel::two_dots(0.5, 1.0, 0.0);
        let bog = diagonalize_bogoliubov(&build_nambu(&model), model.coupled_sites()).unwrap();
        assert_abs_diff_eq!(bog.energies()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bog.energies()[1], 1.0, epsilon = 1e-12);
        for k in 0..2 {
            assert!(bog.hole_coupling()[k].norm() < 1e-12);
            for m in 0..2 {
                let want = if m == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(bog.u()[[m, k]].norm(), want, epsilon = 1e-12);
                assert!(bog.v()[[m, k]].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bogoliubov_unitary_and_diagonalizing() {
        let model = fig2();
        let nambu = build_nambu(&model);
        let bog = diagonalize_bogoliubov(&nambu, model.coupled_sites()).unwrap();
        let u = bog.unitary();
        let eye = linalg::adjoint(&u).dot(&u);
        for ((i, j), z) in eye.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((z - C64::from(want)).norm() < 1e-12);
        }
        let d = linalg::adjoint(&u).dot(nambu.matrix()).dot(&u);
        let n = bog.n_modes();
        for ((i, j), z) in d.indexed_iter() {
            let want = if i != j {
                0.0
            } else if i < n {
                bog.energies()[i]
            } else {
                -bog.energies()[i - n]
            };
            assert!((z - C64::from(want)).norm() < 1e-12, "({i},{j}) = {z}");
        }
        assert_abs_diff_eq!(bog.anticommutator_sum(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn quasiparticle_energies_for_fig2() {
        // Pairing only mixes a_1 with a_2^†: ω = sqrt(((ε1+ε2)/2)² + δ²) ± (ε2−ε1)/2.
        let bog = diagonalize_bogoliubov(&build_nambu(&fig2()), &[0, 1]).unwrap();
        let root = (0.75_f64.powi(2) + 0.49).sqrt();
        assert_abs_diff_eq!(bog.energies()[0], root - 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(bog.energies()[1], root + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn zero_mode_is_flagged() {
        let model = QuadraticModel::two_dots(0.0, 1.0, 0.0);
        let err = diagonalize_bogoliubov(&build_nambu(&model), &[0]).unwrap_err();
        assert!(matches!(err, GmeError::DegenerateSpectrum { .. }));
    }

    #[test]
    fn phase_convention_is_deterministic() {
        let bog = diagonalize_bogoliubov(&build_nambu(&fig2()), &[0, 1]).unwrap();
        let u = bog.unitary();
        for k in 0..bog.n_modes() {
            let col = u.column(k);
            let max = col.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            let pivot = col.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap();
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
    }

    #[test]
    fn generator_is_pure_imaginary_antisymmetric() {
        let h = majorana_generator(&fig2());
        for ((i, j), z) in h.h().indexed_iter() {
            assert!(z.re.abs() < 1e-15);
            assert!((z + h.h()[[j, i]]).norm() < 1e-15);
        }
        assert_eq!(h.structure(), &Array2::<C64>::eye(4));
    }

    #[test]
    fn real_couplings_fill_only_block_off_diagonals() {
        let h = majorana_generator(&fig2());
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(h.h()[[2 * a, 2 * b]], C64::from(0.0));
                assert_eq!(h.h()[[2 * a + 1, 2 * b + 1]], C64::from(0.0));
            }
        }
    }

    #[test]
    fn single_mode_generator() {
        // H = ε a^† a = ε/2 + iε w_0 w_1  =>  h_01 = iε/2.
        let model = QuadraticModel::new(Array2::from_elem((1, 1), C64::from(0.8)), Array2::zeros((1, 1)), vec![0]).unwrap();
        let h = majorana_generator(&model);
        assert!((h.h()[[0, 1]] - C64::new(0.0, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn coefficients_at_zero_reproduce_creation_operator() {
        let model = QuadraticModel::new(
            Array2::from_elem((1, 1), C64::from(0.8)),
            Array2::zeros((1, 1)),
            vec![0],
        )
        .unwrap();
        let bog = diagonalize_bogoliubov(&build_nambu(&model), &[0]).unwrap();
        let a = interaction_coefficients(&bog, 0.0);
        // A^† = (w_0 − i w_1)/√2.
        assert!((a[[0, 0]] - C64::from(FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((a[[0, 1]] - C64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((a[[1, 0]] - C64::from(FRAC_1_SQRT_2)).norm() < 1e-14);
        assert!((a[[1, 1]] - C64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-14);
    }

    #[test]
    fn coefficient_rows_are_conjugate() {
        let bog = diagonalize_bogoliubov(&build_nambu(&fig2()), &[0, 1]).unwrap();
        for t in [-3.0, -0.4, 0.0, 1.0, 7.5] {
            let a = interaction_coefficients(&bog, t);
            for j in 0..4 {
                assert!((a[[1, j]] - a[[0, j]].conj()).norm() < 1e-15);
            }
            // {A^†(t), A(t)} = sum_j 𝔸_1j 𝔸_2j with {w_i, w_j} = δ_ij.
            let anti: C64 = (0..4).map(|j| a[[0, j]] * a[[1, j]]).sum();
            assert!((anti - C64::from(2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn vacuum_and_full_covariances() {
        let vac = initial_covariance(&InitialState::Vacuum, 1).unwrap();
        assert!((vac.gamma()[[0, 1]] - I).norm() < 1e-15);
        assert_abs_diff_eq!(vac.populations()[0], 0.0, epsilon = 1e-15);
        let full = initial_covariance(&InitialState::FullyOccupied, 1).unwrap();
        assert!((full.gamma()[[0, 1]] + I).norm() < 1e-15);
        assert_abs_diff_eq!(full.populations()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bell_pair_is_half_filled() {
        let bell = initial_covariance(&InitialState::BellPair, 2).unwrap();
        for p in bell.populations() {
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        }
        assert!(initial_covariance(&InitialState::BellPair, 1).is_err());
    }

    #[test]
    fn explicit_state_is_validated() {
        let bad = Array2::from_elem((2, 2), C64::from(1.0));
        assert!(matches!(
            initial_covariance(&InitialState::Explicit(bad), 1),
            Err(GmeError::InvalidState(_))
        ));
        let mut unphysical = Array2::zeros((2, 2));
        unphysical[[0, 1]] = C64::new(0.0, 2.0);
        unphysical[[1, 0]] = C64::new(0.0, -2.0);
        assert!(initial_covariance(&InitialState::Explicit(unphysical), 1).is_err());
        assert!(initial_covariance(&InitialState::Explicit(Array2::zeros((3, 3))), 1).is_err());
    }
}
