//! Brute-force many-body reference for a few modes via the Jordan–Wigner
//! representation. Dimension `2^n`; meant for `n ≲ 6`.
//!
//! Basis state `s` has mode `k` occupied when bit `k` of `s` is set, and
//! `a_k` carries the string `(−1)^{n_0 + … + n_{k−1}}`.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{Array1, Array2};

use crate::error::{GmeError, Result};
use crate::linalg;
use crate::model::QuadraticModel;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

pub fn annihilators(n_modes: usize) -> Vec<Array2<C64>> {
    let dim = 1usize << n_modes;
    (0..n_modes)
        .map(|k| {
            let mut a = Array2::zeros((dim, dim));
            for s in 0..dim {
                if s & (1 << k) != 0 {
                    let parity = (s & ((1 << k) - 1)).count_ones();
                    a[[s ^ (1 << k), s]] = C64::from(if parity % 2 == 0 { 1.0 } else { -1.0 });
                }
            }
            a
        })
        .collect()
}

/// `w_{2k} = (a_k^† + a_k)/√2`, `w_{2k+1} = i(a_k^† − a_k)/√2`.
pub fn majoranas(n_modes: usize) -> Vec<Array2<C64>> {
    let mut out = Vec::with_capacity(2 * n_modes);
    for a in annihilators(n_modes) {
        let ad = linalg::adjoint(&a);
        out.push((&ad + &a).mapv(|z| z * FRAC_1_SQRT_2));
        out.push((&ad - &a).mapv(|z| z * I * FRAC_1_SQRT_2));
    }
    out
}

/// `sum J_nm a_n^† a_m + ½ Δ_nm a_n^† a_m^† − ½ Δ*_nm a_n a_m`.
pub fn hamiltonian(model: &QuadraticModel) -> Array2<C64> {
    let n = model.n_modes();
    let a = annihilators(n);
    let ad: Vec<_> = a.iter().map(linalg::adjoint).collect();
    let dim = 1usize << n;
    let mut h = Array2::<C64>::zeros((dim, dim));
    for p in 0..n {
        for q in 0..n {
            let j = model.hopping()[[p, q]];
            if j != C64::new(0.0, 0.0) {
                h.scaled_add(j, &ad[p].dot(&a[q]));
            }
            let d = model.pairing()[[p, q]];
            if d != C64::new(0.0, 0.0) {
                h.scaled_add(d * 0.5, &ad[p].dot(&ad[q]));
                h.scaled_add(-d.conj() * 0.5, &a[p].dot(&a[q]));
            }
        }
    }
    h
}

/// `(|0…0⟩ + a_0^† a_1^† |0…0⟩)/√2`.
pub fn bell_state(n_modes: usize) -> Array1<C64> {
    let mut psi = Array1::zeros(1 << n_modes);
    psi[0] = C64::from(FRAC_1_SQRT_2);
    // a_0^† a_1^† |0⟩ = a_0^† |01⟩ = |11⟩ with no sign: mode 0 sits left of mode 1.
    psi[0b11] = C64::from(FRAC_1_SQRT_2);
    psi
}

/// Product state with the given occupation bits.
pub fn occupation_state(n_modes: usize, occupied: &[usize]) -> Array1<C64> {
    let mut psi = Array1::zeros(1 << n_modes);
    let s = occupied.iter().fold(0usize, |s, &k| s | (1 << k));
    psi[s] = C64::from(1.0);
    psi
}

pub fn expectation(op: &Array2<C64>, psi: &Array1<C64>) -> C64 {
    psi.mapv(|z| z.conj()).dot(&op.dot(psi))
}

/// `Γ_kq = ⟨w_k w_q − w_q w_k⟩`.
pub fn covariance(psi: &Array1<C64>) -> Array2<C64> {
    let n = psi.len().trailing_zeros() as usize;
    let w = majoranas(n);
    let wpsi: Vec<Array1<C64>> = w.iter().map(|m| m.dot(psi)).collect();
    Array2::from_shape_fn((2 * n, 2 * n), |(k, q)| {
        // ⟨w_k w_q⟩ = (w_k ψ)^† (w_q ψ) since w_k is Hermitian.
        let kq = wpsi[k].mapv(|z| z.conj()).dot(&wpsi[q]);
        let qk = wpsi[q].mapv(|z| z.conj()).dot(&wpsi[k]);
        kq - qk
    })
}

pub fn populations(psi: &Array1<C64>) -> Vec<f64> {
    let n = psi.len().trailing_zeros() as usize;
    annihilators(n)
        .iter()
        .map(|a| {
            let ap = a.dot(psi);
            ap.iter().map(|z| z.norm_sqr()).sum()
        })
        .collect()
}

/// Closed evolution under a fixed Hamiltonian via its eigendecomposition.
#[derive(Debug, Clone)]
pub struct FockEvolution {
    energies: Array1<f64>,
    vectors: Array2<C64>,
}

impl FockEvolution {
    pub fn new(hamiltonian: &Array2<C64>) -> Result<Self> {
        if linalg::hermiticity_defect(hamiltonian) > 1e-12 {
            return Err(GmeError::InvalidModel("Fock Hamiltonian is not Hermitian".into()));
        }
        let (energies, vectors) = linalg::eigh(hamiltonian)?;
        Ok(Self { energies, vectors })
    }

    pub fn from_model(model: &QuadraticModel) -> Result<Self> {
        Self::new(&hamiltonian(model))
    }

    /// `e^{−iHt}` applied to `psi`.
    pub fn evolve(&self, psi: &Array1<C64>, t: f64) -> Array1<C64> {
        let mut c = linalg::adjoint(&self.vectors).dot(psi);
        for (z, &e) in c.iter_mut().zip(&self.energies) {
            *z *= C64::from_polar(1.0, -e * t);
        }
        self.vectors.dot(&c)
    }

    /// `e^{−iHt}` as a matrix.
    pub fn propagator(&self, t: f64) -> Array2<C64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &e) in scaled.columns_mut().into_iter().zip(&self.energies) {
            col.mapv_inplace(|z| z * C64::from_polar(1.0, -e * t));
        }
        scaled.dot(&linalg::adjoint(&self.vectors))
    }

    /// Heisenberg picture `e^{iHt} O e^{−iHt}`.
    pub fn heisenberg(&self, op: &Array2<C64>, t: f64) -> Array2<C64> {
        let u = self.propagator(t);
        linalg::adjoint(&u).dot(op).dot(&u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
        a.dot(b) + b.dot(a)
    }

    #[test]
    fn canonical_anticommutation() {
        let a = annihilators(3);
        let dim = 8;
        for p in 0..3 {
            for q in 0..3 {
                let ad = linalg::adjoint(&a[q]);
                let ac = anticommutator(&a[p], &ad);
                let want: Array2<C64> = if p == q { Array2::eye(dim) } else { Array2::zeros((dim, dim)) };
                assert!(linalg::max_abs(&(&ac - &want)) < 1e-15);
                assert!(linalg::max_abs(&anticommutator(&a[p], &a[q])) < 1e-15);
            }
        }
        let w = majoranas(3);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                let ac = anticommutator(&w[i], &w[j]);
                assert!(linalg::max_abs(&(&ac - &Array2::eye(dim).mapv(|z: C64| z * want))) < 1e-15);
            }
        }
    }

    #[test]
    fn bell_state_structure() {
        let psi = bell_state(2);
        for p in populations(&psi) {
            assert!((p - 0.5).abs() < 1e-15);
        }
        let a = annihilators(2);
        // ⟨a_0 a_1⟩ = −½.
        let f = expectation(&a[0].dot(&a[1]), &psi);
        assert!((f - C64::from(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn free_mode_phases() {
        let model = QuadraticModel::new(Array2::from_elem((1, 1), C64::from(0.8)), Array2::zeros((1, 1)), vec![0]).unwrap();
        let ev = FockEvolution::from_model(&model).unwrap();
        let mut psi = Array1::zeros(2);
        psi[0] = C64::from(0.6);
        psi[1] = C64::from(0.8);
        let a = &annihilators(1)[0];
        let a0 = expectation(a, &psi);
        for t in [0.5, 2.0, 7.0] {
            let p = ev.evolve(&psi, t);
            assert!((populations(&p)[0] - 0.64).abs() < 1e-14);
            assert!((expectation(a, &p) - a0 * C64::from_polar(1.0, -0.8 * t)).norm() < 1e-14);
        }
    }
}
