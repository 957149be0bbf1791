use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Float;

use crate::CMatrix;

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.nrows();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `f(M)` for Hermitian `M` through its spectral decomposition.
pub(crate) fn hermitian_function<F: Fn(f64) -> Complex64>(m: &CMatrix, f: F) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for c in 0..n {
        let s = f(values[c]);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

pub(crate) fn sqrt_psd(m: &CMatrix) -> CMatrix {
    hermitian_function(m, |v| Complex64::new(v.max(0.0).sqrt(), 0.0))
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `√C(n, k)` table for `n < dim`.
pub(crate) fn sqrt_binomials(dim: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for n in 0..dim {
        let mut row = alloc::vec![1.0; n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows.into_iter()
        .map(|r| r.into_iter().map(|c| c.sqrt()).collect())
        .collect()
}
