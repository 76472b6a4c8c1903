//! `L(X_B)` as a multimatrix algebra.
//!
//! For each block `k` of `B` let `M_k = [((e_p|e_q)_B)^k_{11}]`. Writing
//! `M_k = U diag(s) U*` on its range, `W_k = diag(s)^{1/2} U*` is an isometry
//! from the Hilbert space `X e^k_{11}` onto `C^{r_k}`, and
//! `pi_k(T) = W_k T W_k^+` is the block-`k` component of a *-isomorphism
//! `L(X_B) -> M_{r_1} + ... + M_{r_K}`. The inverse uses the invertible
//! coordinate change `V = [W_k R(e^k_{i1})]_{k,i}`, which conjugates `T` to
//! `sum_k I_{n_k} (x) pi_k(T)`.

use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra, ScalarFunction};

use super::HilbertBimodule;

const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OperatorRep {
    algebra: MultiMatrixAlgebra,
    /// Blocks `(k, n_k)` of `B` that occur.
    support: Vec<(usize, usize)>,
    w: Vec<CMat>,
    w_pinv: Vec<CMat>,
    v: CMat,
    v_inv: CMat,
}

impl OperatorRep {
    pub(crate) fn new(x: &HilbertBimodule) -> Self {
        let d = x.dim();
        let b = x.right_algebra();
        let mut support = Vec::new();
        let mut w = Vec::new();
        let mut w_pinv = Vec::new();
        let mut ranks = Vec::new();
        for (k, &n) in b.blocks().iter().enumerate() {
            let g = &x.right_gram_blocks()[k];
            let m = CMat::from_fn(d, d, |p, q| g[(p * n, q * n)]);
            let (vals, vecs) = linalg::heig(&m);
            let top = vals.last().copied().unwrap_or(0.0).max(1.0);
            let keep: Vec<usize> = (0..d).filter(|&i| vals[i] > RANK_TOL * top).collect();
            if keep.is_empty() {
                continue;
            }
            let r = keep.len();
            let wk = CMat::from_fn(r, d, |i, p| vecs[(p, keep[i])].conj() * vals[keep[i]].sqrt());
            let wp = CMat::from_fn(d, r, |p, i| vecs[(p, keep[i])] / vals[keep[i]].sqrt());
            support.push((k, n));
            w.push(wk);
            w_pinv.push(wp);
            ranks.push(r);
        }
        let mut rows = Vec::new();
        for ((k, n), wk) in support.iter().zip(&w) {
            for i in 0..*n {
                rows.push(wk * &x.right_action_units()[b.unit_index(*k, i, 0)]);
            }
        }
        let total: usize = rows.iter().map(|r| r.nrows()).sum();
        let mut v = CMat::zeros(total, d);
        let mut at = 0;
        for r in rows {
            v.view_mut((at, 0), (r.nrows(), d)).copy_from(&r);
            at += r.nrows();
        }
        let v_inv = if total == d {
            v.clone().try_inverse().unwrap_or_else(|| pinv(&v))
        } else {
            pinv(&v)
        };
        Self {
            algebra: MultiMatrixAlgebra::from_blocks_unchecked(ranks),
            support,
            w,
            w_pinv,
            v,
            v_inv,
        }
    }

    /// `L(X_B)` as an abstract multimatrix algebra.
    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    /// Blocks of `B` that occur in `X`, in representation order.
    pub fn b_blocks(&self) -> Vec<usize> {
        self.support.iter().map(|s| s.0).collect()
    }

    pub fn to_rep(&self, t: &CMat) -> AlgebraElement {
        AlgebraElement::from_blocks_unchecked(
            self.w.iter().zip(&self.w_pinv).map(|(w, wp)| w * t * wp).collect(),
        )
    }

    pub fn from_rep(&self, e: &AlgebraElement) -> CMat {
        let total = self.v.nrows();
        let mut big = CMat::zeros(total, total);
        let mut at = 0;
        for ((_, n), blk) in self.support.iter().zip(e.blocks()) {
            let r = blk.nrows();
            for _ in 0..*n {
                big.view_mut((at, at), (r, r)).copy_from(blk);
                at += r;
            }
        }
        &self.v_inv * big * &self.v
    }

    pub fn adjoint(&self, t: &CMat) -> CMat {
        self.from_rep(&self.to_rep(t).adjoint())
    }

    pub fn is_positive(&self, t: &CMat, tol: f64) -> bool {
        self.to_rep(t).is_positive(tol)
    }

    pub fn min_eigenvalue(&self, t: &CMat) -> f64 {
        self.to_rep(t).min_eigenvalue()
    }

    pub fn apply(&self, t: &CMat, f: &ScalarFunction, tol: f64) -> Result<CMat> {
        Ok(self.from_rep(&self.to_rep(t).functional_calculus(f, tol)?))
    }

    /// Matrix units of `L(X_B)` in the flat order of [`OperatorRep::algebra`].
    pub fn units(&self) -> Vec<CMat> {
        self.algebra
            .units()
            .into_iter()
            .map(|(k, i, j)| self.from_rep(&self.algebra.matrix_unit(k, i, j)))
            .collect()
    }
}

fn pinv(m: &CMat) -> CMat {
    m.clone().pseudo_inverse(1e-12).unwrap_or_else(|_| CMat::zeros(m.ncols(), m.nrows()))
}
