//! Complete positivity via Choi matrices, and positive-semidefinite pencils.

use crate::linalg::{self, CMat};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra};

/// Choi matrices of a linear map `f` between multimatrix algebras:
/// `C[k][l] = sum_ij E_ij (x) f(e^k_ij)_l`. The map is completely positive
/// exactly when every block is positive semidefinite.
pub fn choi_blocks(
    src: &MultiMatrixAlgebra,
    tgt: &MultiMatrixAlgebra,
    f: impl Fn(&AlgebraElement) -> AlgebraElement,
) -> Vec<Vec<CMat>> {
    let mut out: Vec<Vec<CMat>> = src
        .blocks()
        .iter()
        .map(|&n| tgt.blocks().iter().map(|&m| CMat::zeros(n * m, n * m)).collect())
        .collect();
    for (k, i, j) in src.units() {
        let img = f(&src.matrix_unit(k, i, j));
        for (l, &m) in tgt.blocks().iter().enumerate() {
            out[k][l].view_mut((i * m, j * m), (m, m)).copy_from(img.block(l));
        }
    }
    out
}

/// Smallest eigenvalue over all Choi blocks, and the largest absolute one.
pub fn choi_spectrum(blocks: &[Vec<CMat>]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut scale = 0.0f64;
    for row in blocks {
        for c in row {
            if c.is_empty() {
                continue;
            }
            let (vals, _) = linalg::heig(c);
            lo = lo.min(vals[0]);
            scale = scale.max(vals[0].abs()).max(vals[vals.len() - 1].abs());
        }
    }
    (lo, scale)
}

/// `true` when the Choi blocks are PSD up to `tol` relative to their size.
pub fn is_cp(blocks: &[Vec<CMat>], tol: f64) -> bool {
    let (lo, scale) = choi_spectrum(blocks);
    lo >= -tol * scale.max(1.0)
}

/// Choi matrix of the identity map on a single block `M_n`: `n |Omega><Omega|`
/// with `Omega = sum_i e_i (x) e_i` unnormalised.
pub fn identity_choi(n: usize) -> CMat {
    let mut c = CMat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            c[(i * n + i, j * n + j)] = linalg::ONE;
        }
    }
    c
}

/// Largest `c >= 0` with `P - c Q >= 0`, for `P, Q >= 0`. Returns infinity when
/// `Q = 0` and zero when `Q` is not dominated on the kernel of `P`.
pub fn pencil_gap(p: &CMat, q: &CMat, tol: f64) -> f64 {
    let (vals, vecs) = linalg::heig(p);
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > tol * top).collect();
    let qn = linalg::spectral_norm(q);
    if qn == 0.0 {
        return f64::INFINITY;
    }
    let n = p.nrows();
    let u = CMat::from_fn(n, keep.len(), |r, c| vecs[(r, keep[c])]);
    let proj = &u * u.adjoint();
    let outside = linalg::identity(n) - &proj;
    if linalg::spectral_norm(&(&outside * q * &outside)) > tol * qn {
        return 0.0;
    }
    let w = CMat::from_fn(keep.len(), n, |r, c| vecs[(c, keep[r])].conj() / vals[keep[r]].sqrt());
    let m = &w * q * w.adjoint();
    let top_m = linalg::max_eig(&m);
    if top_m <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / top_m
    }
}

/// Bisection for the same quantity on `[0, hi]`.
pub fn pencil_gap_bisect(p: &CMat, q: &CMat, hi: f64, iters: usize, tol: f64) -> f64 {
    let scale = linalg::spectral_norm(p).max(linalg::spectral_norm(q)).max(1.0);
    let ok = |c: f64| linalg::min_eig(&(p - q * linalg::c(c))) >= -tol * scale;
    let (mut lo, mut hi) = (0.0, hi);
    if ok(hi) {
        return hi;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest `c` such that `f - c id` is completely positive on `alg`, for a
/// completely positive `f: alg -> alg`.
pub fn cp_gap(alg: &MultiMatrixAlgebra, f: impl Fn(&AlgebraElement) -> AlgebraElement, tol: f64) -> f64 {
    let c = choi_blocks(alg, alg, f);
    alg.blocks()
        .iter()
        .enumerate()
        .map(|(k, &n)| pencil_gap(&c[k][k], &identity_choi(n), tol))
        .fold(f64::INFINITY, f64::min)
}

/// As [`cp_gap`], by bisection on the Choi blocks.
pub fn cp_gap_bisect(
    alg: &MultiMatrixAlgebra,
    f: impl Fn(&AlgebraElement) -> AlgebraElement,
    hi: f64,
    iters: usize,
    tol: f64,
) -> f64 {
    let c = choi_blocks(alg, alg, f);
    alg.blocks()
        .iter()
        .enumerate()
        .map(|(k, &n)| pencil_gap_bisect(&c[k][k], &identity_choi(n), hi, iters, tol))
        .fold(f64::INFINITY, f64::min)
}
