//! Hermitian eigendecomposition.
//!
//! Backed by nalgebra's symmetric eigensolver (Householder tridiagonalization
//! followed by implicit-shift QR sweeps). Results are re-sorted ascending so
//! callers get a deterministic order.

use nalgebra::DMatrix;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Input tolerance for the Hermitian precondition.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column k is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// V diag(λ) V*.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for i in 0..d {
            for k in 0..d {
                scaled[(i, k)] *= self.values[k];
            }
        }
        scaled.matmul(&self.vectors.adjoint())
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigensolve of {}x{}", m.rows(), m.cols())));
    }
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let d = m.rows();
    if d == 0 {
        return Ok(Eigen { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let h = m.hermitian_part();
    let all_real = h.data().iter().all(|z| z.im == 0.0);
    let (values, columns): (Vec<f64>, Vec<Vec<C64>>) = if all_real {
        let dm = DMatrix::from_row_slice(d, d, &h.data().iter().map(|z| z.re).collect::<Vec<_>>());
        let eig = dm.symmetric_eigen();
        let cols = (0..d)
            .map(|k| eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    } else {
        let dm = DMatrix::from_row_slice(d, d, h.data());
        let eig = dm.symmetric_eigen();
        let cols = (0..d).map(|k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    };
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut vectors = ComplexMatrix::zeros(d, d);
    for (k, &src) in order.iter().enumerate() {
        for (i, z) in columns[src].iter().enumerate() {
            vectors[(i, k)] = *z;
        }
    }
    Ok(Eigen { values: order.iter().map(|&i| values[i]).collect(), vectors })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(m)?.values)
}
