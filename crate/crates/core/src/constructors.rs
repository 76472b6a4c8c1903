//! Standard families of bi-Hilbertian bimodules.

use std::collections::{BTreeMap, BTreeSet};

use crate::bimodule::{BimoduleParts, HilbertBimodule};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra};

fn unit_matrix(d: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> CMat {
    let mut m = CMat::zeros(d, d);
    for (r, c) in pairs {
        m[(r, c)] += linalg::ONE;
    }
    m
}

/// `C^n` as a `C`–`C` bimodule with `(x|y) = sum conj(x_i) y_i` and
/// `_C(x|y) = (y | T x)` for a positive definite `T`.
pub fn from_hilbert_space(n: usize, t: &CMat) -> Result<HilbertBimodule> {
    if n == 0 || t.shape() != (n, n) {
        return Err(Error::Input(format!("T must be {n}x{n} with n >= 1")));
    }
    if linalg::hermitian_defect(t) > 1e-12 * linalg::spectral_norm(t).max(1.0) {
        return Err(Error::Input("T is not Hermitian".into()));
    }
    let lo = linalg::min_eig(t);
    if lo <= 0.0 {
        return Err(Error::Input(format!("T is not positive definite (min eigenvalue {lo:.3e})")));
    }
    let c = MultiMatrixAlgebra::scalars();
    HilbertBimodule::from_blocks(
        c.clone(),
        c,
        n,
        vec![linalg::identity(n)],
        vec![linalg::identity(n)],
        vec![linalg::identity(n)],
        Some(vec![t.transpose()]),
    )
}

/// `C^n` as an `M_n`–`C` imprimitivity bimodule, `_{M_n}(x|y) = x y*`.
pub fn imprimitivity(n: usize) -> Result<HilbertBimodule> {
    let a = MultiMatrixAlgebra::new(vec![n])?;
    let left = a.units().into_iter().map(|(_, i, j)| unit_matrix(n, [(i, j)])).collect();
    let left_gram = unit_matrix(n * n, (0..n).flat_map(|p| (0..n).map(move |q| (p * n + p, q * n + q))));
    HilbertBimodule::from_blocks(
        a,
        MultiMatrixAlgebra::scalars(),
        n,
        left,
        vec![linalg::identity(n)],
        vec![linalg::identity(n)],
        Some(vec![left_gram]),
    )
}

/// `A` embedded in `B` with `multiplicity[l][k]` copies of block `l` of `A`
/// stacked (in order of `l`) down the diagonal of block `k` of `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Inclusion {
    pub a: MultiMatrixAlgebra,
    pub b: MultiMatrixAlgebra,
    pub multiplicity: Vec<Vec<usize>>,
}

impl Inclusion {
    pub fn new(a: MultiMatrixAlgebra, b: MultiMatrixAlgebra, multiplicity: Vec<Vec<usize>>) -> Result<Self> {
        if multiplicity.len() != a.num_blocks()
            || multiplicity.iter().any(|r| r.len() != b.num_blocks())
        {
            return Err(Error::Input(format!(
                "multiplicity must be {}x{}",
                a.num_blocks(),
                b.num_blocks()
            )));
        }
        for (k, &n) in b.blocks().iter().enumerate() {
            let used: usize = (0..a.num_blocks()).map(|l| multiplicity[l][k] * a.block_size(l)).sum();
            if used != n {
                return Err(Error::Input(format!(
                    "inclusion is not unital: block {k} of B has size {n} but receives {used}"
                )));
            }
        }
        for (l, row) in multiplicity.iter().enumerate() {
            if row.iter().all(|&m| m == 0) {
                return Err(Error::Input(format!("block {l} of A is not embedded")));
            }
        }
        Ok(Self { a, b, multiplicity })
    }

    /// Identity inclusion `B ⊂ B`.
    pub fn identity(b: &MultiMatrixAlgebra) -> Self {
        let k = b.num_blocks();
        let multiplicity = (0..k).map(|l| (0..k).map(|j| usize::from(l == j)).collect()).collect();
        Self { a: b.clone(), b: b.clone(), multiplicity }
    }

    /// Row offsets inside block `k` of `B` of the copies of block `l` of `A`.
    fn copies(&self, l: usize, k: usize) -> Vec<usize> {
        let mut off = 0;
        for l2 in 0..l {
            off += self.multiplicity[l2][k] * self.a.block_size(l2);
        }
        let a = self.a.block_size(l);
        (0..self.multiplicity[l][k]).map(|c| off + c * a).collect()
    }

    pub fn embed(&self, x: &AlgebraElement) -> AlgebraElement {
        let mut out = self.b.zero();
        for k in 0..self.b.num_blocks() {
            for l in 0..self.a.num_blocks() {
                let a = self.a.block_size(l);
                for off in self.copies(l, k) {
                    out.block_mut(k).view_mut((off, off), (a, a)).copy_from(x.block(l));
                }
            }
        }
        out
    }

    /// Flat `B`-unit indices summing to the image of the `A`-unit `idx`.
    pub fn embedded_unit(&self, idx: usize) -> Vec<usize> {
        let (l, i, j) = self.a.unit(idx);
        let mut out = Vec::new();
        for k in 0..self.b.num_blocks() {
            for off in self.copies(l, k) {
                out.push(self.b.unit_index(k, off + i, off + j));
            }
        }
        out
    }
}

/// A conditional expectation `E: B -> A` of the form
/// `E(b)_l = sum_k w_lk sum_c b_k[copy c of l]`, i.e. weighted traces on the
/// multiplicity spaces.
#[derive(Clone, Debug)]
pub struct ConditionalExpectation {
    pub inclusion: Inclusion,
    pub weights: Vec<Vec<f64>>,
}

impl ConditionalExpectation {
    pub fn new(inclusion: Inclusion, weights: Vec<Vec<f64>>) -> Result<Self> {
        let m = &inclusion.multiplicity;
        if weights.len() != m.len() || weights.iter().zip(m).any(|(w, r)| w.len() != r.len()) {
            return Err(Error::Input("weights must have the shape of the multiplicity matrix".into()));
        }
        for (l, (w, r)) in weights.iter().zip(m).enumerate() {
            let mut total = 0.0;
            for (k, (&wk, &mk)) in w.iter().zip(r).enumerate() {
                if mk > 0 && !(wk > 0.0 && wk.is_finite()) {
                    return Err(Error::Input(format!("weight ({l},{k}) must be positive")));
                }
                total += wk * mk as f64;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Input(format!(
                    "E is not unital on block {l}: sum_k w_lk m_lk = {total}"
                )));
            }
        }
        Ok(Self { inclusion, weights })
    }

    pub fn identity(b: &MultiMatrixAlgebra) -> Self {
        let inc = Inclusion::identity(b);
        let weights = inc.multiplicity.iter().map(|r| r.iter().map(|&m| m as f64).collect()).collect();
        Self { inclusion: inc, weights }
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        let inc = &self.inclusion;
        let mut out = inc.a.zero();
        for l in 0..inc.a.num_blocks() {
            let a = inc.a.block_size(l);
            for k in 0..inc.b.num_blocks() {
                let w = linalg::c(self.weights[l][k]);
                for off in inc.copies(l, k) {
                    let blk = x.block(k).view((off, off), (a, a)).into_owned();
                    *out.block_mut(l) += blk * w;
                }
            }
        }
        out
    }

    fn apply_unit(&self, idx: Option<usize>) -> AlgebraElement {
        let b = &self.inclusion.b;
        match idx {
            Some(u) => {
                let (k, i, j) = b.unit(u);
                self.apply(&b.matrix_unit(k, i, j))
            }
            None => self.inclusion.a.zero(),
        }
    }
}

fn unit_element(alg: &MultiMatrixAlgebra, idx: Option<usize>) -> AlgebraElement {
    match idx {
        Some(u) => {
            let (k, i, j) = alg.unit(u);
            alg.matrix_unit(k, i, j)
        }
        None => alg.zero(),
    }
}

/// The three bimodules attached to a conditional expectation `E: B -> A`.
#[derive(Clone, Debug)]
pub struct ExpectationBimodules {
    /// `_B B_A` with `(x|y)_A = E(x*y)` and `_B(x|y) = x y*`.
    pub x: HilbertBimodule,
    /// Contragredient of `x`.
    pub y: HilbertBimodule,
    /// `_A B_A` with `(x|y)_A = E(x*y)` and `_A(x|y) = E(x y*)`.
    pub z: HilbertBimodule,
}

/// Coordinates are the matrix units of `B` in flat order.
pub fn from_expectation(e: &ConditionalExpectation) -> Result<ExpectationBimodules> {
    let inc = &e.inclusion;
    let (a, b) = (&inc.a, &inc.b);
    let d = b.dim();
    let left_mult = |u: usize| unit_matrix(d, (0..d).filter_map(|f| b.unit_product(u, f).map(|g| (g, f))));
    let right_mult = |u: usize| unit_matrix(d, (0..d).filter_map(|f| b.unit_product(f, u).map(|g| (g, f))));
    let right_a: Vec<CMat> = (0..a.dim())
        .map(|ua| {
            inc.embedded_unit(ua).into_iter().fold(CMat::zeros(d, d), |acc, u| acc + right_mult(u))
        })
        .collect();
    let left_a: Vec<CMat> = (0..a.dim())
        .map(|ua| inc.embedded_unit(ua).into_iter().fold(CMat::zeros(d, d), |acc, u| acc + left_mult(u)))
        .collect();
    let e_gram: Vec<Vec<AlgebraElement>> = (0..d)
        .map(|f| (0..d).map(|g| e.apply_unit(b.unit_product(b.unit_adjoint(f), g))).collect())
        .collect();
    let e_gram_left: Vec<Vec<AlgebraElement>> = (0..d)
        .map(|f| (0..d).map(|g| e.apply_unit(b.unit_product(f, b.unit_adjoint(g)))).collect())
        .collect();
    let b_gram_left: Vec<Vec<AlgebraElement>> = (0..d)
        .map(|f| (0..d).map(|g| unit_element(b, b.unit_product(f, b.unit_adjoint(g)))).collect())
        .collect();
    let x = HilbertBimodule::new(BimoduleParts {
        a: b.clone(),
        b: a.clone(),
        dim: d,
        left_action: (0..b.dim()).map(left_mult).collect(),
        right_action: right_a.clone(),
        right_gram: e_gram.clone(),
        left_gram: Some(b_gram_left),
    })?;
    let y = x.contragredient()?;
    let z = HilbertBimodule::new(BimoduleParts {
        a: a.clone(),
        b: a.clone(),
        dim: d,
        left_action: left_a,
        right_action: right_a,
        right_gram: e_gram,
        left_gram: Some(e_gram_left),
    })?;
    Ok(ExpectationBimodules { x, y, z })
}

/// The identity bimodule `_B B_B`.
pub fn identity_bimodule(b: &MultiMatrixAlgebra) -> Result<HilbertBimodule> {
    Ok(from_expectation(&ConditionalExpectation::identity(b))?.x)
}

/// A finite weighted directed graph. Edge `(i, j, t)` runs from `i` to `j`.
#[derive(Clone, Debug)]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
}

/// Closed-form indices of a graph bimodule.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphIndices {
    /// `sum_j T_ij` per vertex `i`.
    pub right: Vec<f64>,
    /// `sum_i 1 / T_ij` per vertex `j`.
    pub left: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String, f64)>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Input("graph has no vertices".into()));
        }
        let mut index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate vertex {v:?}")));
            }
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (s, r, t) in edges {
            let si = *index.get(&s).ok_or_else(|| Error::Input(format!("unknown vertex {s:?}")))?;
            let ri = *index.get(&r).ok_or_else(|| Error::Input(format!("unknown vertex {r:?}")))?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Input(format!("edge {s}->{r} has non-positive weight {t}")));
            }
            if !seen.insert((si, ri)) {
                return Err(Error::Input(format!("duplicate edge {s}->{r}")));
            }
            out.push((si, ri, t));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !out.iter().any(|e| e.0 == i) {
                return Err(Error::Input(format!(
                    "vertex {v:?} has no outgoing edge, so the left action is not injective"
                )));
            }
        }
        Ok(Self { vertices, edges: out })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// `X = C^E` over `A = C^V`: `(a.f)(i,j) = a(i) f(i,j)`,
    /// `(f.a)(i,j) = f(i,j) a(j)`, `(f|g)_A(j) = sum_i conj(f) g` and
    /// `_A(f|g)(i) = sum_j T_ij f conj(g)`.
    pub fn bimodule(&self) -> Result<HilbertBimodule> {
        let n = self.vertices.len();
        let d = self.edges.len();
        let alg = MultiMatrixAlgebra::diagonal(n)?;
        let diag = |pred: &dyn Fn(usize) -> Option<f64>| {
            let mut m = CMat::zeros(d, d);
            for e in 0..d {
                if let Some(w) = pred(e) {
                    m[(e, e)] = linalg::c(w);
                }
            }
            m
        };
        let edges = &self.edges;
        let left = (0..n).map(|i| diag(&|e| (edges[e].0 == i).then_some(1.0))).collect();
        let right = (0..n).map(|j| diag(&|e| (edges[e].1 == j).then_some(1.0))).collect();
        let rg = (0..n).map(|j| diag(&|e| (edges[e].1 == j).then_some(1.0))).collect();
        let lg = (0..n).map(|i| diag(&|e| (edges[e].0 == i).then_some(edges[e].2))).collect();
        HilbertBimodule::from_blocks(alg.clone(), alg, d, left, right, rg, Some(lg))
    }

    pub fn closed_form(&self) -> GraphIndices {
        let n = self.vertices.len();
        let mut right = vec![0.0; n];
        let mut left = vec![0.0; n];
        for &(i, j, t) in &self.edges {
            right[i] += t;
            left[j] += 1.0 / t;
        }
        let c1 = right.iter().copied().fold(0.0, f64::max);
        let c2 = left.iter().copied().fold(0.0, f64::max);
        GraphIndices { right, left, c1, c2 }
    }
}

/// Complex matrix from real entries, row-major.
pub fn real_matrix(rows: &[Vec<f64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
}
