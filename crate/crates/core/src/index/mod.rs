//! Right and left indices, best constants, the basic construction and the
//! fiber bound.

mod basic;
mod constants;
pub mod cp;
mod fiber;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bimodule::{random_unitary, FrameSet, HilbertBimodule};
use crate::error::{contract, Result};
use crate::exec::Exec;
use crate::linalg::{self, CMat};
use crate::multimatrix::{AlgebraElement, ScalarFunction};

pub use basic::{BasicConstruction, BasicConstructionChecks};
pub use constants::BestConstants;
pub use fiber::{fiber_decomposition, Fiber, FiberReport, RelativeCommutant};

/// Relative cut below which a central coefficient counts as zero.
pub const SUPPORT_TOL: f64 = 1e-10;

/// `F(T) = sum_i _A(T u_i | u_i)` for a tight frame `u`.
pub fn extend_f(x: &HilbertBimodule, frame: &FrameSet, t: &CMat) -> Result<AlgebraElement> {
    let mut acc = x.left_algebra().zero();
    for u in &frame.vectors {
        acc = &acc + &x.inner_left(&(t * u), u)?;
    }
    Ok(acc)
}

/// Right index `r-Ind[X] = F(1)`.
pub fn right_index(x: &HilbertBimodule) -> Result<AlgebraElement> {
    let frame = x.tight_frame()?;
    extend_f(x, &frame, &linalg::identity(x.dim()))
}

/// Left index `l-Ind[X] = r-Ind[Xbar]`.
pub fn left_index(x: &HilbertBimodule) -> Result<AlgebraElement> {
    right_index(&x.contragredient()?)
}

/// Real central coefficients, after checking centrality.
fn central_reals(e: &AlgebraElement, tol: f64, what: &str) -> Result<Vec<f64>> {
    if !e.is_central(tol) {
        return Err(contract(format!(
            "{what} is not central (defect {:.3e})",
            e.central_defect()
        )));
    }
    Ok(e.central_coefficients().iter().map(|z| z.re).collect())
}

fn support_flags(coeffs: &[f64]) -> Vec<bool> {
    let top = coeffs.iter().copied().fold(0.0, f64::max).max(1e-300);
    coeffs.iter().map(|&c| c > SUPPORT_TOL * top).collect()
}

#[derive(Clone, Debug)]
pub struct IndexOptions {
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    /// Extra random tight frames used for the basis-independence check.
    pub extra_frames: usize,
    pub exec: Exec,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self { tol: 1e-9, seed: 0, samples: 10_000, extra_frames: 2, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    #[serde(serialize_with = "crate::io::ser_element")]
    pub r_ind: AlgebraElement,
    #[serde(serialize_with = "crate::io::ser_element")]
    pub l_ind: AlgebraElement,
    /// Central coefficients of `r_ind` on the blocks of `A`.
    pub r_coeffs: Vec<f64>,
    /// Central coefficients of `l_ind` on the blocks of `B`.
    pub l_coeffs: Vec<f64>,
    /// `||r-Ind||` and `||l-Ind||`.
    pub r_num: f64,
    pub l_num: f64,
    /// `sqrt(r_num * l_num)`.
    pub dim_rel: f64,
    /// Support of `r-Ind` in the blocks of `A`, i.e. the projection `p`.
    pub p_support: Vec<bool>,
    /// Support of `l-Ind` in the blocks of `B`, i.e. the projection `q`.
    pub q_support: Vec<bool>,
    pub r_invertible: bool,
    pub l_invertible: bool,
    /// Largest distance between indices computed from different tight frames.
    pub frame_agreement: f64,
    /// Central coefficients of `Ind[X] = psi_0(l-Ind) phi(r-Ind)` per block of
    /// `L(X_B)`.
    pub ind_coeffs: Vec<f64>,
    pub constants: BestConstants,
}

/// All index data of a bi-Hilbertian bimodule.
pub fn index_report(x: &HilbertBimodule, opts: &IndexOptions) -> Result<IndexReport> {
    let xbar = x.contragredient()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let frames = |m: &HilbertBimodule, rng: &mut ChaCha8Rng| -> Result<Vec<FrameSet>> {
        let base = m.tight_frame()?;
        let mut out = vec![base.clone()];
        for i in 0..opts.extra_frames {
            let f = if i % 2 == 0 {
                m.random_tight_frame(rng, 1 + i)?
            } else {
                base.mix(&random_unitary(rng, base.len()))?
            };
            out.push(f);
        }
        Ok(out)
    };
    let id = linalg::identity(x.dim());
    let rs: Vec<AlgebraElement> = frames(x, &mut rng)?
        .iter()
        .map(|f| extend_f(x, f, &id))
        .collect::<Result<_>>()?;
    let ls: Vec<AlgebraElement> = frames(&xbar, &mut rng)?
        .iter()
        .map(|f| extend_f(&xbar, f, &id))
        .collect::<Result<_>>()?;
    let agree = |v: &[AlgebraElement]| {
        v.iter().skip(1).map(|e| e.distance(&v[0]) / v[0].norm().max(1.0)).fold(0.0, f64::max)
    };
    let frame_agreement = agree(&rs).max(agree(&ls));
    let r_ind = rs[0].clone();
    let l_ind = ls[0].clone();
    let r_coeffs = central_reals(&r_ind, 1e-8, "r-Ind")?;
    let l_coeffs = central_reals(&l_ind, 1e-8, "l-Ind")?;
    let p_support = support_flags(&r_coeffs);
    let q_support = support_flags(&l_coeffs);
    let r_num = r_ind.norm();
    let l_num = l_ind.norm();
    let ind = index_element(x, &r_ind, &l_ind)?;
    let ind_rep = x.rep().to_rep(&ind);
    let ind_coeffs = ind_rep.central_coefficients().iter().map(|z| z.re).collect();
    let constants = constants::best_constants(x, r_num, opts)?;
    Ok(IndexReport {
        r_invertible: p_support.iter().all(|&b| b),
        l_invertible: q_support.iter().all(|&b| b),
        r_ind,
        l_ind,
        r_coeffs,
        l_coeffs,
        r_num,
        l_num,
        dim_rel: (r_num * l_num).sqrt(),
        p_support,
        q_support,
        frame_agreement,
        ind_coeffs,
        constants,
    })
}

/// `Ind[X] = psi_0(l-Ind) phi(r-Ind)` as an operator on `X`.
pub fn index_element(x: &HilbertBimodule, r_ind: &AlgebraElement, l_ind: &AlgebraElement) -> Result<CMat> {
    Ok(x.right_act(l_ind)? * x.left_act(r_ind)?)
}

/// Best constants `lambda, lambda'` with
/// `lambda' ||(x|x)_B|| <= ||_A(x|x)|| <= lambda ||(x|x)_B||`.
pub fn best_constants(x: &HilbertBimodule, opts: &IndexOptions) -> Result<BestConstants> {
    let r = right_index(x)?;
    constants::best_constants(x, r.norm(), opts)
}

/// Inverse of a central element on its support.
pub fn support_inverse(e: &AlgebraElement) -> Result<AlgebraElement> {
    let top = e.norm().max(1e-300);
    e.functional_calculus(&ScalarFunction::support_inverse(SUPPORT_TOL * top), 1e-8 * top)
}

/// Support projection of a positive element.
pub fn support_projection(e: &AlgebraElement) -> Result<AlgebraElement> {
    let top = e.norm().max(1e-300);
    e.functional_calculus(&ScalarFunction::support(SUPPORT_TOL * top), 1e-8 * top)
}
