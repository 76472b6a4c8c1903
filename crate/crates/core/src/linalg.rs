//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn heig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (vals, vecs)
}

pub fn min_eig(m: &CMat) -> f64 {
    heig(m).0.first().copied().unwrap_or(0.0)
}

pub fn max_eig(m: &CMat) -> f64 {
    heig(m).0.last().copied().unwrap_or(0.0)
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    spectral_norm(&(m - m.adjoint()))
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn herm_apply(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = heig(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (k, v) in vals.iter().enumerate() {
        let s = f(*v);
        for r in 0..n {
            scaled[(r, k)] *= s;
        }
    }
    &scaled * vecs.adjoint()
}

pub fn psd_sqrt(m: &CMat) -> CMat {
    herm_apply(m, |t| t.max(0.0).sqrt())
}

/// Orthonormal basis (as columns) of the eigenspaces with eigenvalue above
/// `rel_tol * largest eigenvalue`.
pub fn range_basis(m: &CMat, rel_tol: f64) -> CMat {
    let (vals, vecs) = heig(m);
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > rel_tol * top).collect();
    CMat::from_fn(m.nrows(), keep.len(), |r, k| vecs[(r, keep[k])])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hilbert-Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
