//! Finite direct sums of full matrix algebras and their elements.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, shape, Error, Result};
use crate::linalg::{self, CMat, C64};

/// `M_{n_1} ⊕ ... ⊕ M_{n_K}`, identified by its block sizes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiMatrixAlgebra {
    blocks: Vec<usize>,
}

impl MultiMatrixAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Input("algebra needs at least one block".into()));
        }
        if let Some(k) = blocks.iter().position(|&n| n == 0) {
            return Err(Error::Input(format!("block {k} has size 0")));
        }
        Ok(Self { blocks })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<usize>) -> Self {
        Self { blocks }
    }

    /// The scalars `C`.
    pub fn scalars() -> Self {
        Self { blocks: vec![1] }
    }

    /// Commutative algebra `C^n`.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self, k: usize) -> usize {
        self.blocks[k]
    }

    /// Complex dimension, `sum n_k^2`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks.iter().all(|&n| n == 1)
    }

    /// Offset of block `k` in the flat matrix-unit ordering.
    pub fn offset(&self, k: usize) -> usize {
        self.blocks[..k].iter().map(|n| n * n).sum()
    }

    /// Flat index of the matrix unit `e^k_{ij}`.
    pub fn unit_index(&self, k: usize, i: usize, j: usize) -> usize {
        self.offset(k) + i * self.blocks[k] + j
    }

    /// All matrix units `(k, i, j)` in flat order.
    pub fn units(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        for (k, &n) in self.blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out.push((k, i, j));
                }
            }
        }
        out
    }

    /// Decodes a flat unit index into `(k, i, j)`.
    pub fn unit(&self, idx: usize) -> (usize, usize, usize) {
        let mut rest = idx;
        for (k, &n) in self.blocks.iter().enumerate() {
            if rest < n * n {
                return (k, rest / n, rest % n);
            }
            rest -= n * n;
        }
        panic!("unit index {idx} out of range for {self}");
    }

    /// `e_f e_g` as a flat unit index, `None` when the product vanishes.
    pub fn unit_product(&self, f: usize, g: usize) -> Option<usize> {
        let (k, i, j) = self.unit(f);
        let (k2, i2, j2) = self.unit(g);
        (k == k2 && j == i2).then(|| self.unit_index(k, i, j2))
    }

    /// Flat index of the adjoint unit.
    pub fn unit_adjoint(&self, f: usize) -> usize {
        let (k, i, j) = self.unit(f);
        self.unit_index(k, j, i)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|&n| CMat::zeros(n, n)).collect(),
        }
    }

    pub fn identity(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|&n| linalg::identity(n)).collect(),
        }
    }

    pub fn matrix_unit(&self, k: usize, i: usize, j: usize) -> AlgebraElement {
        let mut e = self.zero();
        e.blocks[k][(i, j)] = linalg::ONE;
        e
    }

    pub fn central_projection(&self, k: usize) -> AlgebraElement {
        let mut e = self.zero();
        e.blocks[k] = linalg::identity(self.blocks[k]);
        e
    }

    /// Central element with scalar `coeffs[k]` on block `k`.
    pub fn central(&self, coeffs: &[C64]) -> Result<AlgebraElement> {
        if coeffs.len() != self.blocks.len() {
            return Err(shape(format!(
                "{} central coefficients for {} blocks",
                coeffs.len(),
                self.blocks.len()
            )));
        }
        Ok(AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(coeffs)
                .map(|(&n, &z)| linalg::identity(n) * z)
                .collect(),
        })
    }

    pub fn from_flat(&self, flat: &[C64]) -> Result<AlgebraElement> {
        if flat.len() != self.dim() {
            return Err(shape(format!("flat length {} != dim {}", flat.len(), self.dim())));
        }
        let mut e = self.zero();
        let mut it = flat.iter();
        for b in e.blocks.iter_mut() {
            let n = b.nrows();
            for i in 0..n {
                for j in 0..n {
                    b[(i, j)] = *it.next().unwrap();
                }
            }
        }
        Ok(e)
    }

    /// Element with independent standard complex Gaussian entries.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|&n| random_matrix(rng, n, n)).collect(),
        }
    }

    /// Random positive element `a* a + eps`.
    pub fn random_positive<R: Rng + ?Sized>(&self, rng: &mut R, eps: f64) -> AlgebraElement {
        let a = self.random_element(rng);
        let mut p = &a.adjoint() * &a;
        for b in p.blocks.iter_mut() {
            let n = b.nrows();
            *b += linalg::identity(n) * linalg::c(eps);
        }
        p
    }

    pub fn contains(&self, x: &AlgebraElement) -> bool {
        x.shape_blocks() == self.blocks
    }
}

impl fmt::Display for MultiMatrixAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| random_c64(rng))
}

pub fn random_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// An element `(x_1, ..., x_K)` of a multimatrix algebra. The algebra is
/// implied by the block shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        for (k, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(shape(format!("block {k} is {}x{}", b.nrows(), b.ncols())));
            }
        }
        if blocks.is_empty() {
            return Err(shape("element with no blocks"));
        }
        Ok(Self { blocks })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<CMat>) -> Self {
        Self { blocks }
    }

    pub fn algebra(&self) -> MultiMatrixAlgebra {
        MultiMatrixAlgebra { blocks: self.shape_blocks() }
    }

    fn shape_blocks(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut CMat {
        &mut self.blocks[k]
    }

    pub fn flatten(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    out.push(b[(i, j)]);
                }
            }
        }
        out
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.shape_blocks() != other.shape_blocks() {
            return Err(shape(format!(
                "elements of {} and {}",
                self.algebra(),
                other.algebra()
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self - other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self * other)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b * z).collect() }
    }

    pub fn scale_re(&self, t: f64) -> Self {
        self.scale(linalg::c(t))
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b.adjoint()).collect() }
    }

    /// C*-norm: the largest blockwise spectral norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::spectral_norm).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol * self.norm().max(1.0)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.blocks.iter().map(linalg::hermitian_defect).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(linalg::min_eig).fold(f64::INFINITY, f64::min)
    }

    /// Hermitian with spectrum `>= -tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }

    pub fn trace(&self, k: usize) -> C64 {
        self.blocks[k].trace()
    }

    /// Per-block scalars `tr(x_k) / n_k`.
    pub fn central_coefficients(&self) -> Vec<C64> {
        self.blocks
            .iter()
            .map(|b| b.trace() / linalg::c(b.nrows() as f64))
            .collect()
    }

    /// Distance from the centre, measured blockwise against `tr(x_k)/n_k`.
    pub fn central_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let z = b.trace() / linalg::c(b.nrows() as f64);
                linalg::spectral_norm(&(b - linalg::identity(b.nrows()) * z))
            })
            .fold(0.0, f64::max)
    }

    pub fn is_central(&self, tol: f64) -> bool {
        self.central_defect() <= tol * self.norm().max(1.0)
    }

    /// Decomposes `x = sum_k c_k z_k + x_0` with `z_k` the central projections
    /// and `x_0` traceless in every block.
    pub fn center_decompose(&self) -> (Vec<C64>, AlgebraElement) {
        let coeffs = self.central_coefficients();
        let rest = self
            .blocks
            .iter()
            .zip(&coeffs)
            .map(|(b, z)| b - linalg::identity(b.nrows()) * *z)
            .collect();
        (coeffs, Self { blocks: rest })
    }

    /// Continuous functional calculus for a Hermitian element.
    pub fn functional_calculus(&self, f: &ScalarFunction, tol: f64) -> Result<Self> {
        if !self.is_hermitian(tol) {
            return Err(contract(format!(
                "functional calculus needs a Hermitian element (defect {:.3e})",
                self.hermitian_defect()
            )));
        }
        let (lo, hi) = f.domain;
        let mut out = Vec::with_capacity(self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            let (vals, _) = linalg::heig(b);
            if let (Some(&first), Some(&last)) = (vals.first(), vals.last()) {
                if first < lo - tol || last > hi + tol {
                    return Err(Error::Domain(format!(
                        "block {k} spectrum [{first:.6e}, {last:.6e}] outside [{lo}, {hi}] for {}",
                        f.name
                    )));
                }
            }
            out.push(linalg::herm_apply(b, |t| f.eval(t.clamp(lo, hi))));
        }
        Ok(Self { blocks: out })
    }
}

macro_rules! blockwise {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&AlgebraElement> for &AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, rhs: &AlgebraElement) -> AlgebraElement {
                assert_eq!(self.blocks.len(), rhs.blocks.len(), "block count mismatch");
                AlgebraElement {
                    blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr<AlgebraElement> for AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, rhs: AlgebraElement) -> AlgebraElement {
                &self $op &rhs
            }
        }
    };
}

blockwise!(Add, add, +);
blockwise!(Sub, sub, -);
blockwise!(Mul, mul, *);

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale_re(-1.0)
    }
}

/// A real function on a closed interval, used for functional calculus.
#[derive(Clone)]
pub struct ScalarFunction {
    name: String,
    domain: (f64, f64),
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFunction({} on [{}, {}])", self.name, self.domain.0, self.domain.1)
    }
}

impl ScalarFunction {
    pub fn new(
        name: impl Into<String>,
        domain: (f64, f64),
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), domain, f: Arc::new(f) }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sqrt() -> Self {
        Self::new("sqrt", (0.0, f64::INFINITY), |t| t.max(0.0).sqrt())
    }

    pub fn exp() -> Self {
        Self::new("exp", (f64::NEG_INFINITY, f64::INFINITY), f64::exp)
    }

    /// `t^(-1/2)` on `[floor, inf)`.
    pub fn inv_sqrt(floor: f64) -> Self {
        Self::new("inv_sqrt", (floor, f64::INFINITY), |t| 1.0 / t.sqrt())
    }

    /// Inverse on the support: `1/t` above `cut`, `0` below.
    pub fn support_inverse(cut: f64) -> Self {
        Self::new("support_inverse", (f64::NEG_INFINITY, f64::INFINITY), move |t| {
            if t > cut {
                1.0 / t
            } else {
                0.0
            }
        })
    }

    /// Spectral projection onto `(cut, inf)`.
    pub fn support(cut: f64) -> Self {
        Self::new("support", (f64::NEG_INFINITY, f64::INFINITY), move |t| {
            if t > cut {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Member `n >= 1` of the dyadic piecewise-linear partition of unity on
    /// `[0, 1]`: `f_1` ramps from 0 at 1/2 to 1 at 1, and for `n >= 2`, `f_n`
    /// rises on `[2^-n, 2^-(n-1)]` and falls on `[2^-(n-1), 2^-(n-2)]`.
    pub fn dyadic_bump(n: u32) -> Self {
        assert!(n >= 1, "dyadic_bump index starts at 1");
        let f = move |x: f64| -> f64 {
            if n == 1 {
                if x <= 0.5 {
                    0.0
                } else {
                    (2.0 * x - 1.0).min(1.0)
                }
            } else {
                let a = 0.5f64.powi(n as i32);
                let b = 2.0 * a;
                let c = 4.0 * a;
                if x < a || x >= c {
                    0.0
                } else if x < b {
                    x / a - 1.0
                } else {
                    2.0 - x / b
                }
            }
        };
        Self::new(format!("dyadic_bump({n})"), (0.0, 1.0), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn units_round_trip_through_flat() {
        let a = MultiMatrixAlgebra::new(vec![2, 1, 3]).unwrap();
        assert_eq!(a.dim(), 14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = a.random_element(&mut rng);
        let y = a.from_flat(&x.flatten()).unwrap();
        assert_eq!(x, y);
        for (idx, (k, i, j)) in a.units().into_iter().enumerate() {
            assert_eq!(a.unit_index(k, i, j), idx);
        }
    }

    #[test]
    fn mismatched_algebras_are_errors() {
        let a = MultiMatrixAlgebra::new(vec![2]).unwrap();
        let b = MultiMatrixAlgebra::new(vec![1, 1]).unwrap();
        assert!(a.identity().checked_mul(&b.identity()).is_err());
        assert!(MultiMatrixAlgebra::new(vec![]).is_err());
        assert!(MultiMatrixAlgebra::new(vec![2, 0]).is_err());
    }

    #[test]
    fn functional_calculus_rejects_bad_input() {
        let a = MultiMatrixAlgebra::new(vec![2]).unwrap();
        let x = a.matrix_unit(0, 0, 1);
        assert!(matches!(
            x.functional_calculus(&ScalarFunction::exp(), 1e-12),
            Err(Error::Contract(_))
        ));
        let neg = a.identity().scale_re(-1.0);
        assert!(matches!(
            neg.functional_calculus(&ScalarFunction::sqrt(), 1e-12),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sqrt_squares_back() {
        let a = MultiMatrixAlgebra::new(vec![3, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = a.random_positive(&mut rng, 0.1);
        let s = p.functional_calculus(&ScalarFunction::sqrt(), 1e-12).unwrap();
        assert!((&s * &s).distance(&p) < 1e-10 * p.norm());
    }

    #[test]
    fn dyadic_bumps_sum_to_one() {
        for big_n in 2..12u32 {
            let lo = 0.5f64.powi(big_n as i32 - 1);
            for s in 0..200 {
                let x = lo + (1.0 - lo) * s as f64 / 199.0;
                let total: f64 = (1..=big_n).map(|n| ScalarFunction::dyadic_bump(n).eval(x)).sum();
                assert!((total - 1.0).abs() < 1e-12, "N={big_n} x={x} sum={total}");
            }
        }
    }

    #[test]
    fn center_decomposition_splits_trace() {
        let a = MultiMatrixAlgebra::new(vec![2, 2]).unwrap();
        let z = a.central(&[linalg::c(2.0), linalg::c(-1.0)]).unwrap();
        assert!(z.is_central(1e-14));
        let (coeffs, rest) = z.center_decompose();
        assert!((coeffs[0] - linalg::c(2.0)).norm() < 1e-15);
        assert!(rest.norm() < 1e-15);
        assert!(!a.matrix_unit(0, 0, 0).is_central(1e-9));
    }
}
