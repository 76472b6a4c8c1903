use rand::Rng;

use crate::error::{contract, Result};
use crate::linalg::{self, CMat, CVec};
use crate::multimatrix::{random_matrix, ScalarFunction};

use super::{pull_right, HilbertBimodule};

/// A finite family `u_1, ..., u_m` in a right module; tight when
/// `sum_i theta_{u_i, u_i} = 1`.
#[derive(Clone, Debug)]
pub struct FrameSet {
    pub vectors: Vec<CVec>,
}

impl FrameSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Mixes the frame with a scalar unitary `u` (`m x m`): `v_j = sum_i u_ji u_i`.
    /// Tightness is preserved.
    pub fn mix(&self, u: &CMat) -> Result<Self> {
        let m = self.len();
        if u.shape() != (m, m) {
            return Err(crate::error::shape(format!("mixing matrix must be {m}x{m}")));
        }
        let vectors = (0..m)
            .map(|j| {
                let mut v = self.vectors[0].map(|_| linalg::ZERO);
                for i in 0..m {
                    v += &self.vectors[i] * u[(j, i)];
                }
                v
            })
            .collect();
        Ok(Self { vectors })
    }
}

/// Haar-ish random unitary from the QR factorisation of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, m: usize) -> CMat {
    let g = random_matrix(rng, m, m);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..m {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { linalg::ONE };
        for i in 0..m {
            q[(i, j)] *= ph;
        }
    }
    q
}

impl HilbertBimodule {
    pub fn basis(&self) -> Vec<CVec> {
        (0..self.dim)
            .map(|p| {
                let mut e = CVec::zeros(self.dim);
                e[p] = linalg::ONE;
                e
            })
            .collect()
    }

    /// `S = sum_i theta_{x_i, x_i}`.
    pub fn frame_operator(&self, xs: &[CVec]) -> Result<CMat> {
        self.theta_sum(xs, xs)
    }

    /// `u_i = S^{-1/2} x_i`, which is tight when `S` is invertible.
    pub fn tighten(&self, xs: &[CVec]) -> Result<FrameSet> {
        let s = self.frame_operator(xs)?;
        let rep = self.rep();
        let sr = rep.to_rep(&s);
        let lo = sr.min_eigenvalue();
        let scale = sr.norm().max(1e-300);
        if lo <= 1e-12 * scale {
            return Err(contract(format!(
                "family does not generate the module (frame operator min eigenvalue {lo:.3e})"
            )));
        }
        let root = rep.from_rep(&sr.functional_calculus(&ScalarFunction::inv_sqrt(0.0), 1e-9 * scale)?);
        Ok(FrameSet { vectors: xs.iter().map(|x| &root * x).collect() })
    }

    /// Tight frame obtained by tightening the coordinate basis.
    pub fn tight_frame(&self) -> Result<FrameSet> {
        self.tighten(&self.basis())
    }

    /// Tight frame from `d + extra` random generators.
    pub fn random_tight_frame<R: Rng + ?Sized>(&self, rng: &mut R, extra: usize) -> Result<FrameSet> {
        let m = self.dim + extra;
        let g = random_matrix(rng, self.dim, m);
        let xs: Vec<CVec> = (0..m).map(|j| g.column(j).into_owned()).collect();
        self.tighten(&xs)
    }

    /// Operator-norm distance of `sum theta_{u,u}` from the identity.
    pub fn frame_defect(&self, frame: &FrameSet) -> Result<f64> {
        let s = self.frame_operator(&frame.vectors)?;
        Ok(self.operator_norm(&(s - linalg::identity(self.dim))))
    }

    /// For a finite family `x_1..x_n` returns `u_i = (1/n + S)^{-1/2} x_i` and
    /// `T = sum theta_{u_i,u_i} = S (1/n + S)^{-1}`.
    pub fn generalized_basis_step(&self, xs: &[CVec]) -> Result<(FrameSet, CMat)> {
        if xs.is_empty() {
            return Err(contract("generalized basis step needs a nonempty family"));
        }
        let n = xs.len() as f64;
        let s = self.frame_operator(xs)?;
        let shifted = &s + linalg::identity(self.dim) * linalg::c(1.0 / n);
        let root = self.rep().apply(&shifted, &ScalarFunction::inv_sqrt(0.0), 1e-9)?;
        let us: Vec<CVec> = xs.iter().map(|x| &root * x).collect();
        let t = self.frame_operator(&us)?;
        Ok((FrameSet { vectors: us }, t))
    }

    /// `|| sum_i theta_{x_i, y_i} ||` via `|| P^{1/2} Q^{1/2} ||` with
    /// `P = [(x_i|x_j)_B]` and `Q = [(y_i|y_j)_B]` in `M_n(B)`.
    pub fn rank_one_sum_norm(&self, xs: &[CVec], ys: &[CVec]) -> Result<f64> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(crate::error::shape("rank_one_sum_norm needs equal nonempty families"));
        }
        let as_cols = |vs: &[CVec]| CMat::from_fn(self.dim, vs.len(), |r, c| vs[c][r]);
        let (xm, ym) = (as_cols(xs), as_cols(ys));
        let mut best = 0.0f64;
        for (g, &n) in self.right_gram.iter().zip(self.b.blocks()) {
            let p = linalg::psd_sqrt(&pull_right(g, n, &xm));
            let q = linalg::psd_sqrt(&pull_right(g, n, &ym));
            best = best.max(linalg::spectral_norm(&(p * q)));
        }
        Ok(best)
    }
}
