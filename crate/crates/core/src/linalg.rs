//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::fock::C64;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> DVector<f64> {
    m.clone().symmetric_eigenvalues()
}

/// `exp(i s H)` for Hermitian `H`.
pub(crate) fn exp_i_hermitian(h: &DMatrix<C64>, s: f64) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(h);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, s * lambda);
        for v in scaled.column_mut(j).iter_mut() {
            *v *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// Matrix exponential of an anti-Hermitian generator `A`, i.e. `exp(i H)`
/// with `H = -i A`.
pub(crate) fn expm_anti_hermitian(a: &DMatrix<C64>) -> DMatrix<C64> {
    let h = a.map(|z| z * C64::new(0.0, -1.0));
    // Symmetrize away roundoff so the Hermitian solver sees an exact input.
    let h = (&h + h.adjoint()) * C64::from(0.5);
    exp_i_hermitian(&h, 1.0)
}

/// `exp(i s T)` for a real symmetric matrix `T`.
pub(crate) fn exp_i_real_symmetric(t: &DMatrix<f64>, s: f64) -> DMatrix<C64> {
    let n = t.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, C64::from_polar(1.0, s * t[(0, 0)]));
    }
    let eig = SymmetricEigen::new(t.clone());
    let v = &eig.eigenvectors;
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (l, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, s * lambda);
        for c in 0..n {
            let w = phase * v[(c, l)];
            for r in 0..n {
                out[(r, c)] += w * v[(r, l)];
            }
        }
    }
    out
}
