use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bimodule::{FrameSet, HilbertBimodule};
use crate::error::Result;
use crate::linalg::CMat;
use crate::multimatrix::AlgebraElement;

use super::{cp, extend_f, support_inverse, support_projection};

/// The conditional expectation `E = z' F : L(X_B) -> A`, where `z'` inverts
/// `r-Ind` on its support `p`.
#[derive(Clone, Debug)]
pub struct BasicConstruction<'a> {
    x: &'a HilbertBimodule,
    frame: FrameSet,
    pub r_ind: AlgebraElement,
    pub z_prime: AlgebraElement,
    pub p: AlgebraElement,
}

#[derive(Clone, Debug, Serialize)]
pub struct BasicConstructionChecks {
    /// `max ||phi E phi E (U) - phi E (U)||` over matrix units `U` of `L(X_B)`.
    pub idempotent: f64,
    /// `max ||phi E phi (e) - phi (p e)||` over matrix units `e` of `A`.
    pub bimodular: f64,
    /// Smallest Choi eigenvalue of `E`, relative to the largest.
    pub cp_min_eig: f64,
    /// Smallest relative eigenvalue of `phi(F(T)) / lambda' - T` over the
    /// sampled positive `T`.
    pub pp_min_eig: f64,
    pub samples: usize,
}

impl BasicConstructionChecks {
    pub fn pass(&self, tol: f64) -> bool {
        self.idempotent <= tol && self.bimodular <= tol && self.cp_min_eig >= -tol && self.pp_min_eig >= -tol
    }
}

impl<'a> BasicConstruction<'a> {
    pub fn new(x: &'a HilbertBimodule) -> Result<Self> {
        let frame = x.tight_frame()?;
        let r_ind = extend_f(x, &frame, &crate::linalg::identity(x.dim()))?;
        let z_prime = support_inverse(&r_ind)?;
        let p = support_projection(&r_ind)?;
        Ok(Self { x, frame, r_ind, z_prime, p })
    }

    pub fn f(&self, t: &CMat) -> Result<AlgebraElement> {
        extend_f(self.x, &self.frame, t)
    }

    pub fn expectation(&self, t: &CMat) -> Result<AlgebraElement> {
        Ok(&self.z_prime * &self.f(t)?)
    }

    pub fn phi_e(&self, t: &CMat) -> Result<CMat> {
        self.x.left_act(&self.expectation(t)?)
    }

    pub fn checks(&self, lambda_prime: f64, samples: usize, seed: u64) -> Result<BasicConstructionChecks> {
        let x = self.x;
        let rep = x.rep();
        let mut idempotent = 0.0f64;
        for u in rep.units() {
            let once = self.phi_e(&u)?;
            let twice = self.phi_e(&once)?;
            idempotent = idempotent.max(x.operator_norm(&(twice - once)));
        }
        let a = x.left_algebra();
        let mut bimodular = 0.0f64;
        for (l, i, j) in a.units() {
            let e = a.matrix_unit(l, i, j);
            let lhs = self.phi_e(&x.left_act(&e)?)?;
            let rhs = x.left_act(&(&self.p * &e))?;
            bimodular = bimodular.max(x.operator_norm(&(lhs - rhs)));
        }
        let choi = cp::choi_blocks(rep.algebra(), a, |e| {
            self.expectation(&rep.from_rep(e)).expect("shape")
        });
        let (lo, scale) = cp::choi_spectrum(&choi);
        let cp_min_eig = lo / scale.max(1e-300);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pp = f64::INFINITY;
        for _ in 0..samples {
            let pos = rep.algebra().random_positive(&mut rng, 0.0);
            let t = rep.from_rep(&pos);
            let lhs = x.left_act(&self.f(&t)?)? * crate::linalg::c(1.0 / lambda_prime);
            pp = pp.min(rep.min_eigenvalue(&(lhs - &t)) / pos.norm().max(1e-300));
        }
        Ok(BasicConstructionChecks {
            idempotent,
            bimodular,
            cp_min_eig,
            pp_min_eig: pp,
            samples,
        })
    }
}
