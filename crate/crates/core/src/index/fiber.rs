use serde::Serialize;

use crate::bimodule::HilbertBimodule;
use crate::linalg::{self, CMat};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra};

/// The relative commutant `phi(A)' ∩ L(X_B)`, a multimatrix algebra with one
/// block `M_{m}` for every pair (block `l` of `A`, block `k` of `L(X_B)`)
/// where `pi_k(phi(e^l_11))` has rank `m > 0`.
#[derive(Clone, Debug)]
pub struct RelativeCommutant {
    pub algebra: MultiMatrixAlgebra,
    /// `(l, k)` for each block.
    pub labels: Vec<(usize, usize)>,
    /// Matrix units as operators on `X`, in flat order.
    pub units: Vec<CMat>,
}

impl RelativeCommutant {
    pub fn dim(&self) -> usize {
        self.units.len()
    }

    /// Operator on `X` for an element of the abstract algebra.
    pub fn element(&self, e: &AlgebraElement) -> CMat {
        let d = self.units.first().map_or(0, |u| u.nrows());
        crate::bimodule::combine(&self.units, &e.flatten(), d)
    }

    /// Commutant blocks lying over block `l` of `A`.
    pub fn blocks_over(&self, l: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&c| self.labels[c].0 == l).collect()
    }
}

impl HilbertBimodule {
    /// Matrix units of the relative commutant: with `W` an orthonormal basis
    /// of the range of `pi_k(phi(e^l_11))`, the units are
    /// `sum_j pi_k(phi(e^l_j1)) W E_ab W* pi_k(phi(e^l_1j))`.
    pub fn relative_commutant(&self) -> RelativeCommutant {
        let rep = self.rep();
        let a = self.left_algebra();
        let l_alg = rep.algebra().clone();
        let mut sizes = Vec::new();
        let mut labels = Vec::new();
        let mut units = Vec::new();
        for (l, &al) in a.blocks().iter().enumerate() {
            let images: Vec<Vec<CMat>> = (0..al)
                .map(|j| {
                    vec![
                        self.left_action_units()[a.unit_index(l, j, 0)].clone(),
                        self.left_action_units()[a.unit_index(l, 0, j)].clone(),
                    ]
                })
                .collect();
            let reps: Vec<(AlgebraElement, AlgebraElement)> =
                images.iter().map(|v| (rep.to_rep(&v[0]), rep.to_rep(&v[1]))).collect();
            for (k, &r) in l_alg.blocks().iter().enumerate() {
                let p = reps[0].0.block(k);
                let w = linalg::range_basis(&linalg::hermitize(p), 1e-8);
                let w = if linalg::max_eig(&linalg::hermitize(p)) < 0.5 { CMat::zeros(r, 0) } else { w };
                let m = w.ncols();
                if m == 0 {
                    continue;
                }
                sizes.push(m);
                labels.push((l, k));
                for al_ in 0..m {
                    for be in 0..m {
                        let core = w.column(al_) * w.column(be).adjoint();
                        let mut blk = CMat::zeros(r, r);
                        for (down, up) in &reps {
                            blk += down.block(k) * &core * up.block(k);
                        }
                        let mut e = l_alg.zero();
                        *e.block_mut(k) = blk;
                        units.push(rep.from_rep(&e));
                    }
                }
            }
        }
        RelativeCommutant {
            algebra: MultiMatrixAlgebra::from_blocks_unchecked(sizes),
            labels,
            units,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Fiber {
    pub a_block: usize,
    pub dim: usize,
    pub r_ind: f64,
    /// `floor(r_ind / lambda')^2`.
    pub bound: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberReport {
    pub fibers: Vec<Fiber>,
    pub lambda_prime: f64,
    pub commutant_dim: usize,
    pub holds: bool,
}

/// Fibers of the relative commutant over the blocks of `A`, compared with
/// `dim L_w <= floor(r-Ind(w) / lambda')^2`.
pub fn fiber_decomposition(x: &HilbertBimodule, r_coeffs: &[f64], lambda_prime: f64) -> FiberReport {
    let comm = x.relative_commutant();
    let fibers: Vec<Fiber> = r_coeffs
        .iter()
        .enumerate()
        .map(|(l, &r)| {
            let dim = comm.blocks_over(l).iter().map(|&c| comm.algebra.block_size(c).pow(2)).sum();
            let mu = (r / lambda_prime + 1e-9).floor().max(0.0) as u64;
            let bound = mu * mu;
            Fiber { a_block: l, dim, r_ind: r, bound, holds: dim as u64 <= bound }
        })
        .collect();
    FiberReport {
        holds: fibers.iter().all(|f| f.holds),
        fibers,
        lambda_prime,
        commutant_dim: comm.dim(),
    }
}
