use crate::error::{shape, Result};
use crate::linalg::{self, CMat, CVec};

use super::{combine, pull_left, pull_right, trace_gram, HilbertBimodule};

/// Relative eigenvalue cut used to split off the null vectors of an
/// algebraic tensor product.
pub const NULL_TOL: f64 = 1e-9;

/// `X (x)_B Y` together with its relation to the algebraic tensor product.
#[derive(Clone, Debug)]
pub struct TensorProduct {
    pub module: HilbertBimodule,
    /// Isometry from quotient coordinates into `C^{d_X d_Y}`; its range is the
    /// orthogonal complement of the null vectors.
    pub lift: CMat,
    pub dims: (usize, usize),
}

impl TensorProduct {
    /// Class of an algebraic tensor (coordinates indexed by `p * d_Y + s`).
    pub fn project(&self, v: &CVec) -> CVec {
        self.lift.adjoint() * v
    }

    /// Class of `x (x) y`.
    pub fn elementary(&self, x: &CVec, y: &CVec) -> CVec {
        self.project(&elementary(x, y))
    }
}

pub fn elementary(x: &CVec, y: &CVec) -> CVec {
    let mut v = CVec::zeros(x.len() * y.len());
    for p in 0..x.len() {
        for s in 0..y.len() {
            v[p * y.len() + s] = x[p] * y[s];
        }
    }
    v
}

impl HilbertBimodule {
    /// Algebraic tensor product `X (.) Y` with its (possibly degenerate)
    /// Gram data. Not a valid bimodule in general; used for inner products.
    pub fn algebraic_tensor(&self, y: &HilbertBimodule) -> Result<HilbertBimodule> {
        let x = self;
        if x.b != y.a {
            return Err(shape(format!(
                "cannot tensor a module over {} with a module over {}",
                x.b, y.a
            )));
        }
        let (dx, dy) = (x.dim, y.dim);
        let d = dx * dy;
        let id_x = linalg::identity(dx);
        let id_y = linalg::identity(dy);
        let left = x.left_action.iter().map(|m| linalg::kron(m, &id_y)).collect();
        let right = y.right_action.iter().map(|m| linalg::kron(&id_x, m)).collect();

        // (x1 (x) y1 | x2 (x) y2)_C = (y1 | phi_Y((x1|x2)_B) y2)_C
        let phis: Vec<Vec<CMat>> = (0..dx)
            .map(|p| {
                (0..dx)
                    .map(|q| combine(&y.left_action, &x.right_gram_entry(p, q).flatten(), dy))
                    .collect()
            })
            .collect();
        let mut right_gram = Vec::with_capacity(y.b.num_blocks());
        for (gy, &n) in y.right_gram.iter().zip(y.b.blocks()) {
            let w = dy * n;
            let mut g = CMat::zeros(d * n, d * n);
            let idn = linalg::identity(n);
            for p in 0..dx {
                for q in 0..dx {
                    let blk = gy * linalg::kron(&phis[p][q], &idn);
                    g.view_mut((p * w, q * w), (w, w)).copy_from(&blk);
                }
            }
            right_gram.push(g);
        }

        // _A(x1 (x) y1 | x2 (x) y2) = _A(x1 . _B(y1|y2) | x2)
        let left_gram = match (&x.left_gram, &y.left_gram) {
            (Some(lx), Some(_)) => {
                let mut out = Vec::with_capacity(x.a.num_blocks());
                for (gx, &m) in lx.iter().zip(x.a.blocks()) {
                    let idm = linalg::identity(m);
                    let mut g = CMat::zeros(d * m, d * m);
                    for s in 0..dy {
                        for t in 0..dy {
                            let bst = y.left_gram_entry(s, t)?;
                            let r = combine(&x.right_action, &bst.flatten(), dx);
                            let k = linalg::kron(&r, &idm).transpose() * gx;
                            for p in 0..dx {
                                for q in 0..dx {
                                    for al in 0..m {
                                        for be in 0..m {
                                            g[((p * dy + s) * m + al, (q * dy + t) * m + be)] =
                                                k[(p * m + al, q * m + be)];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    out.push(g);
                }
                Some(out)
            }
            _ => None,
        };
        HilbertBimodule::from_blocks(x.a.clone(), y.b.clone(), d, left, right, right_gram, left_gram)
    }

    /// Interior tensor product `X (x)_B Y`: the algebraic tensor product modulo
    /// its null vectors.
    pub fn tensor(&self, y: &HilbertBimodule) -> Result<TensorProduct> {
        let alg = self.algebraic_tensor(y)?;
        let m = trace_gram(&alg.right_gram, alg.b.blocks(), alg.dim);
        let lift = linalg::range_basis(&m, NULL_TOL);
        let module = alg.quotient(&lift)?;
        Ok(TensorProduct { module, lift, dims: (self.dim, y.dim) })
    }

    /// Restriction to the span of the orthonormal columns of `v`, assumed to
    /// be a complement of the null vectors invariant up to null vectors.
    pub(crate) fn quotient(&self, v: &CMat) -> Result<HilbertBimodule> {
        let vh = v.adjoint();
        let cut = |ms: &[CMat]| ms.iter().map(|m| &vh * m * v).collect::<Vec<_>>();
        let rg = self
            .right_gram
            .iter()
            .zip(self.b.blocks())
            .map(|(g, &n)| pull_right(g, n, v))
            .collect();
        let lg = self.left_gram.as_ref().map(|l| {
            l.iter().zip(self.a.blocks()).map(|(g, &n)| pull_left(g, n, v)).collect()
        });
        HilbertBimodule::from_blocks(
            self.a.clone(),
            self.b.clone(),
            v.ncols(),
            cut(&self.left_action),
            cut(&self.right_action),
            rg,
            lg,
        )
    }
}
