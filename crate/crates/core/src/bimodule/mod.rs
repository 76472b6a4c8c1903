//! Finite-dimensional Hilbert C*-bimodules in coordinates.
//!
//! A bimodule `_A X_B` is `C^d` together with
//! * the left action `phi`, given on matrix units of `A` (a *-homomorphism),
//! * the right action `x . b`, given on matrix units of `B` as the matrices
//!   `R(e)` with `x . e = R(e) x` (an anti-homomorphism),
//! * the right Gram data `G_pq = (e_p | e_q)_B`, conjugate-linear in the first
//!   slot, and optionally the left Gram data `L_pq = _A(e_p | e_q)`,
//!   conjugate-linear in the second slot.
//!
//! Gram data are stored per block of the coefficient algebra as one
//! `(d n_k) x (d n_k)` matrix indexed by `(p, alpha), (q, beta)`, i.e. the
//! matrix `[G_pq]` read inside `M_d(M_{n_k})`.

mod frame;
mod rep;
mod tensor;
mod validate;

use std::sync::OnceLock;

use crate::error::{shape, Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra};

pub use frame::{random_unitary, FrameSet};
pub use rep::OperatorRep;
pub use tensor::TensorProduct;
pub use validate::{Check, ValidationReport};

#[derive(Clone, Debug)]
pub struct HilbertBimodule {
    a: MultiMatrixAlgebra,
    b: MultiMatrixAlgebra,
    dim: usize,
    left_action: Vec<CMat>,
    right_action: Vec<CMat>,
    right_gram: Vec<CMat>,
    left_gram: Option<Vec<CMat>>,
    rep: OnceLock<OperatorRep>,
}

/// Entrywise description of a bimodule, the form used by serializers and
/// constructors.
#[derive(Clone, Debug)]
pub struct BimoduleParts {
    pub a: MultiMatrixAlgebra,
    pub b: MultiMatrixAlgebra,
    pub dim: usize,
    /// `phi(e^l_ij)` in the flat unit order of `A`.
    pub left_action: Vec<CMat>,
    /// `R(e^k_ij)` in the flat unit order of `B`.
    pub right_action: Vec<CMat>,
    /// `right_gram[p][q] = (e_p | e_q)_B`.
    pub right_gram: Vec<Vec<AlgebraElement>>,
    /// `left_gram[p][q] = _A(e_p | e_q)`.
    pub left_gram: Option<Vec<Vec<AlgebraElement>>>,
}

fn entries_to_blocks(
    alg: &MultiMatrixAlgebra,
    d: usize,
    entries: &[Vec<AlgebraElement>],
    what: &str,
) -> Result<Vec<CMat>> {
    if entries.len() != d || entries.iter().any(|row| row.len() != d) {
        return Err(shape(format!("{what} must be {d}x{d}")));
    }
    let mut out = Vec::with_capacity(alg.num_blocks());
    for (k, &n) in alg.blocks().iter().enumerate() {
        let mut g = CMat::zeros(d * n, d * n);
        for p in 0..d {
            for q in 0..d {
                let e = &entries[p][q];
                if !alg.contains(e) {
                    return Err(shape(format!("{what}[{p}][{q}] is not in {alg}")));
                }
                g.view_mut((p * n, q * n), (n, n)).copy_from(e.block(k));
            }
        }
        out.push(g);
    }
    Ok(out)
}

fn blocks_to_entry(alg: &MultiMatrixAlgebra, blocks: &[CMat], p: usize, q: usize) -> AlgebraElement {
    let parts = alg
        .blocks()
        .iter()
        .zip(blocks)
        .map(|(&n, g)| g.view((p * n, q * n), (n, n)).into_owned())
        .collect();
    AlgebraElement::from_blocks_unchecked(parts)
}

impl HilbertBimodule {
    /// Assembles a bimodule from entrywise data. Only shapes are checked here;
    /// use [`HilbertBimodule::validate`] for the algebraic axioms.
    pub fn new(parts: BimoduleParts) -> Result<Self> {
        let BimoduleParts { a, b, dim, left_action, right_action, right_gram, left_gram } = parts;
        let rg = entries_to_blocks(&b, dim, &right_gram, "right_gram")?;
        let lg = match left_gram {
            Some(l) => Some(entries_to_blocks(&a, dim, &l, "left_gram")?),
            None => None,
        };
        Self::from_blocks(a, b, dim, left_action, right_action, rg, lg)
    }

    pub(crate) fn from_blocks(
        a: MultiMatrixAlgebra,
        b: MultiMatrixAlgebra,
        dim: usize,
        left_action: Vec<CMat>,
        right_action: Vec<CMat>,
        right_gram: Vec<CMat>,
        left_gram: Option<Vec<CMat>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("bimodule of dimension 0".into()));
        }
        if left_action.len() != a.dim() {
            return Err(shape(format!(
                "{} left action images for dim A = {}",
                left_action.len(),
                a.dim()
            )));
        }
        if right_action.len() != b.dim() {
            return Err(shape(format!(
                "{} right action images for dim B = {}",
                right_action.len(),
                b.dim()
            )));
        }
        for (what, mats) in [("left action", &left_action), ("right action", &right_action)] {
            if let Some(i) = mats.iter().position(|m| m.shape() != (dim, dim)) {
                return Err(shape(format!("{what} image {i} is not {dim}x{dim}")));
            }
        }
        let check_grams = |alg: &MultiMatrixAlgebra, g: &[CMat], what: &str| -> Result<()> {
            if g.len() != alg.num_blocks() {
                return Err(shape(format!("{what}: wrong number of blocks")));
            }
            for (k, m) in g.iter().enumerate() {
                let s = dim * alg.block_size(k);
                if m.shape() != (s, s) {
                    return Err(shape(format!("{what} block {k} is not {s}x{s}")));
                }
            }
            Ok(())
        };
        check_grams(&b, &right_gram, "right gram")?;
        if let Some(l) = &left_gram {
            check_grams(&a, l, "left gram")?;
        }
        Ok(Self {
            a,
            b,
            dim,
            left_action,
            right_action,
            right_gram,
            left_gram,
            rep: OnceLock::new(),
        })
    }

    pub fn to_parts(&self) -> BimoduleParts {
        let d = self.dim;
        let entries = |alg: &MultiMatrixAlgebra, g: &[CMat]| {
            (0..d)
                .map(|p| (0..d).map(|q| blocks_to_entry(alg, g, p, q)).collect())
                .collect()
        };
        BimoduleParts {
            a: self.a.clone(),
            b: self.b.clone(),
            dim: d,
            left_action: self.left_action.clone(),
            right_action: self.right_action.clone(),
            right_gram: entries(&self.b, &self.right_gram),
            left_gram: self.left_gram.as_ref().map(|l| entries(&self.a, l)),
        }
    }

    pub fn left_algebra(&self) -> &MultiMatrixAlgebra {
        &self.a
    }

    pub fn right_algebra(&self) -> &MultiMatrixAlgebra {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_left_gram(&self) -> bool {
        self.left_gram.is_some()
    }

    pub fn left_action_units(&self) -> &[CMat] {
        &self.left_action
    }

    pub fn right_action_units(&self) -> &[CMat] {
        &self.right_action
    }

    pub fn right_gram_blocks(&self) -> &[CMat] {
        &self.right_gram
    }

    pub fn left_gram_blocks(&self) -> Result<&[CMat]> {
        self.left_gram
            .as_deref()
            .ok_or_else(|| Error::Contract("bimodule has no left inner product".into()))
    }

    /// Returns a copy carrying the given left Gram blocks.
    pub(crate) fn with_left_gram_blocks(&self, left: Option<Vec<CMat>>) -> Self {
        let mut out = self.clone();
        out.left_gram = left;
        out
    }

    pub fn with_left_gram(&self, left: Vec<Vec<AlgebraElement>>) -> Result<Self> {
        let l = entries_to_blocks(&self.a, self.dim, &left, "left_gram")?;
        Ok(self.with_left_gram_blocks(Some(l)))
    }

    pub fn without_left_gram(&self) -> Self {
        self.with_left_gram_blocks(None)
    }

    pub fn right_gram_entry(&self, p: usize, q: usize) -> AlgebraElement {
        blocks_to_entry(&self.b, &self.right_gram, p, q)
    }

    pub fn left_gram_entry(&self, p: usize, q: usize) -> Result<AlgebraElement> {
        Ok(blocks_to_entry(&self.a, self.left_gram_blocks()?, p, q))
    }

    fn check_vec(&self, x: &CVec) -> Result<()> {
        if x.len() != self.dim {
            return Err(shape(format!("vector of length {} in a module of dim {}", x.len(), self.dim)));
        }
        Ok(())
    }

    /// `phi(a)` as a `d x d` matrix.
    pub fn left_act(&self, a: &AlgebraElement) -> Result<CMat> {
        if !self.a.contains(a) {
            return Err(shape(format!("element of {} acting on the left of an {}-module", a.algebra(), self.a)));
        }
        Ok(combine(&self.left_action, &a.flatten(), self.dim))
    }

    /// The matrix `R(b)` with `x . b = R(b) x`.
    pub fn right_act(&self, b: &AlgebraElement) -> Result<CMat> {
        if !self.b.contains(b) {
            return Err(shape(format!("element of {} acting on the right of a {}-module", b.algebra(), self.b)));
        }
        Ok(combine(&self.right_action, &b.flatten(), self.dim))
    }

    /// `(x | y)_B`.
    pub fn inner_right(&self, x: &CVec, y: &CVec) -> Result<AlgebraElement> {
        self.check_vec(x)?;
        self.check_vec(y)?;
        Ok(AlgebraElement::from_blocks_unchecked(
            self.b
                .blocks()
                .iter()
                .zip(&self.right_gram)
                .map(|(&n, g)| form_right(g, n, x, y))
                .collect(),
        ))
    }

    /// `_A(x | y)`.
    pub fn inner_left(&self, x: &CVec, y: &CVec) -> Result<AlgebraElement> {
        self.check_vec(x)?;
        self.check_vec(y)?;
        let lg = self.left_gram_blocks()?;
        Ok(AlgebraElement::from_blocks_unchecked(
            self.a.blocks().iter().zip(lg).map(|(&n, g)| form_left(g, n, x, y)).collect(),
        ))
    }

    /// Matrix of the rank-one operator `z -> x . (y | z)_B`.
    pub fn theta(&self, x: &CVec, y: &CVec) -> Result<CMat> {
        self.check_vec(x)?;
        self.check_vec(y)?;
        let d = self.dim;
        let rx = CMat::from_fn(d, self.b.dim(), |r, u| (&self.right_action[u] * x)[r]);
        let mut coeff = CMat::zeros(self.b.dim(), d);
        for (k, &n) in self.b.blocks().iter().enumerate() {
            let off = self.b.offset(k);
            let yk = linalg::kron(&CMat::from_column_slice(d, 1, y.as_slice()), &linalg::identity(n));
            let row = yk.adjoint() * &self.right_gram[k];
            for al in 0..n {
                for be in 0..n {
                    for q in 0..d {
                        coeff[(off + al * n + be, q)] = row[(al, q * n + be)];
                    }
                }
            }
        }
        Ok(rx * coeff)
    }

    /// `sum_i theta_{x_i, y_i}`.
    pub fn theta_sum(&self, xs: &[CVec], ys: &[CVec]) -> Result<CMat> {
        if xs.len() != ys.len() {
            return Err(shape("theta_sum needs equally many x and y"));
        }
        let mut t = CMat::zeros(self.dim, self.dim);
        for (x, y) in xs.iter().zip(ys) {
            t += self.theta(x, y)?;
        }
        Ok(t)
    }

    /// Faithful representation of `L(X_B)` as a multimatrix algebra.
    pub fn rep(&self) -> &OperatorRep {
        self.rep.get_or_init(|| OperatorRep::new(self))
    }

    /// Module adjoint of an adjointable operator.
    pub fn adjoint(&self, t: &CMat) -> CMat {
        self.rep().adjoint(t)
    }

    /// Operator norm on `X_B`.
    pub fn operator_norm(&self, t: &CMat) -> f64 {
        self.rep().to_rep(t).norm()
    }

    /// Operator norm of an arbitrary linear map for the Hilbert space
    /// structure `<x, y> = sum_k tr((x|y)^k_B)`. On `L(X_B)` this agrees with
    /// the module norm.
    pub fn hs_operator_norm(&self, t: &CMat) -> f64 {
        let m = self.trace_gram();
        let root = linalg::psd_sqrt(&m);
        let inv = linalg::herm_apply(&m, |v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
        linalg::spectral_norm(&(root * t * inv))
    }

    /// Trace Gram `M_ij = sum_k tr((e_i|e_j)^k)`; a vector is null exactly
    /// when it lies in the kernel of this matrix.
    pub fn trace_gram(&self) -> CMat {
        trace_gram(&self.right_gram, self.b.blocks(), self.dim)
    }

    /// Contragredient `_B Xbar_A`: same vectors with conjugated coordinates,
    /// the two inner products exchanged.
    pub fn contragredient(&self) -> Result<Self> {
        let lg = self.left_gram_blocks()?;
        let bar_units = |alg: &MultiMatrixAlgebra, imgs: &[CMat]| -> Vec<CMat> {
            alg.units()
                .into_iter()
                .map(|(k, i, j)| imgs[alg.unit_index(k, j, i)].map(|z| z.conj()))
                .collect()
        };
        // In conjugated coordinates (xbar | ybar)_A = _A(x | y) reads off the
        // old left Gram unchanged, and symmetrically for the new left Gram.
        Self::from_blocks(
            self.b.clone(),
            self.a.clone(),
            self.dim,
            bar_units(&self.b, &self.right_action),
            bar_units(&self.a, &self.left_action),
            lg.to_vec(),
            Some(self.right_gram.clone()),
        )
    }

    /// `Y_n = X^n` as an `M_n(A)`–`B` bimodule.
    pub fn amplify(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("amplification by 0".into()));
        }
        let d = self.dim;
        let nd = n * d;
        let a_n = MultiMatrixAlgebra::new(self.a.blocks().iter().map(|&m| m * n).collect())?;
        let id_n = linalg::identity(n);
        // Block (i, alpha) of M_n(M_m) sits at row i*m + alpha.
        let mut left = Vec::with_capacity(a_n.dim());
        for (l, big, bi, bj) in a_n.units().into_iter().map(|(l, i, j)| (l, a_n.block_size(l), i, j)) {
            let m = big / n;
            let (i, al) = (bi / m, bi % m);
            let (j, be) = (bj / m, bj % m);
            let mut e = CMat::zeros(n, n);
            e[(i, j)] = linalg::ONE;
            left.push(linalg::kron(&e, &self.left_action[self.a.unit_index(l, al, be)]));
        }
        let right = self.right_action.iter().map(|r| linalg::kron(&id_n, r)).collect();
        let right_gram = self
            .b
            .blocks()
            .iter()
            .zip(&self.right_gram)
            .map(|(_, g)| linalg::kron(&id_n, g))
            .collect();
        let left_gram = self.left_gram.as_ref().map(|lg| {
            self.a
                .blocks()
                .iter()
                .zip(lg)
                .map(|(&m, g)| {
                    // ((i,p),(i,alpha)) x ((j,q),(j,beta)) entry is (L_pq)_{alpha beta}
                    let s = n * d * n * m;
                    let mut out = CMat::zeros(s, s);
                    for i in 0..n {
                        for p in 0..d {
                            for al in 0..m {
                                let r = ((i * d + p) * n + i) * m + al;
                                for j in 0..n {
                                    for q in 0..d {
                                        for be in 0..m {
                                            let c = ((j * d + q) * n + j) * m + be;
                                            out[(r, c)] = g[(p * m + al, q * m + be)];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    out
                })
                .collect()
        });
        Self::from_blocks(a_n, self.b.clone(), nd, left, right, right_gram, left_gram)
    }
}

pub(crate) fn combine(units: &[CMat], coeffs: &[C64], d: usize) -> CMat {
    let mut out = CMat::zeros(d, d);
    for (m, z) in units.iter().zip(coeffs) {
        if *z != linalg::ZERO {
            out += m * *z;
        }
    }
    out
}

fn column(x: &CVec) -> CMat {
    CMat::from_column_slice(x.len(), 1, x.as_slice())
}

/// `(x|y)` read from a right Gram block: `(x (x) I)^* G (y (x) I)`.
pub(crate) fn form_right(g: &CMat, n: usize, x: &CVec, y: &CVec) -> CMat {
    let id = linalg::identity(n);
    linalg::kron(&column(x), &id).adjoint() * g * linalg::kron(&column(y), &id)
}

/// `_A(x|y)` read from a left Gram block: `sum x_p conj(y_q) L[(p,.),(q,.)]`.
pub(crate) fn form_left(g: &CMat, n: usize, x: &CVec, y: &CVec) -> CMat {
    let id = linalg::identity(n);
    linalg::kron(&column(x), &id).transpose() * g * linalg::kron(&column(&y.map(|z| z.conj())), &id)
}

/// Right Gram block of the coordinates `x = M x'`.
pub(crate) fn pull_right(g: &CMat, n: usize, m: &CMat) -> CMat {
    let mk = linalg::kron(m, &linalg::identity(n));
    mk.adjoint() * g * mk
}

/// Left Gram block of the coordinates `x = M x'`.
pub(crate) fn pull_left(g: &CMat, n: usize, m: &CMat) -> CMat {
    let mk = linalg::kron(m, &linalg::identity(n));
    mk.transpose() * g * mk.map(|z| z.conj())
}

pub(crate) fn trace_gram(g: &[CMat], blocks: &[usize], d: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    for (gk, &n) in g.iter().zip(blocks) {
        for p in 0..d {
            for q in 0..d {
                for al in 0..n {
                    m[(p, q)] += gk[(p * n + al, q * n + al)];
                }
            }
        }
    }
    m
}
