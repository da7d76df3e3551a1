use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, EigValsh, UPLO};

use crate::error::Result;
use crate::C64;

pub(crate) fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entry of `|A - A^dagger|`.
pub(crate) fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut d = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            d = d.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    d
}

/// Eigendecomposition of a Hermitian matrix, eigenvectors in the columns.
///
/// The input is copied into column-major order first: for row-major complex
/// input the backend returns the eigenvectors of the conjugate matrix.
pub(crate) fn eigh(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let mut f = Array2::zeros(m.dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}

pub(crate) fn eigvalsh(m: &Array2<C64>) -> Result<Array1<f64>> {
    Ok(m.eigvalsh(UPLO::Lower)?)
}

/// Projects onto pure-imaginary antisymmetric matrices; returns the largest
/// pre-projection deviation from that structure.
pub(crate) fn project_imag_antisymmetric(m: &mut Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[[i, j]] + m[[j, i]]).norm()).max(m[[i, j]].re.abs());
        }
    }
    for i in 0..n {
        m[[i, i]] = C64::new(0.0, 0.0);
        for j in (i + 1)..n {
            let v = 0.5 * (m[[i, j]].im - m[[j, i]].im);
            m[[i, j]] = C64::new(0.0, v);
            m[[j, i]] = C64::new(0.0, -v);
        }
    }
    dev
}

pub(crate) fn conj(m: &Array2<C64>) -> Array2<C64> {
    m.mapv(|z| z.conj())
}

pub(crate) fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}
