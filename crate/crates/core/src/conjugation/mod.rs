//! Solutions of the conjugate equations, and what they determine.
//!
//! A solution for `_A X_B` is a `B`–`A` bimodule `Y` with `R ∈ Y (x)_A X` and
//! `Rbar ∈ X (x)_B Y`. Both are stored as coefficient matrices in the
//! algebraic tensor bases: `r[(s, q)]` is the coefficient of `f_s (x) e_q`
//! and `rbar[(p, s)]` that of `e_p (x) f_s`.

mod minimize;

use serde::Serialize;

use crate::bimodule::{HilbertBimodule, TensorProduct};
use crate::error::{contract, shape, Result};
use crate::index::{self, cp, extend_f};
use crate::linalg::{self, CMat, CVec};
use crate::multimatrix::AlgebraElement;

pub use minimize::{min_dimension, MinDimOptions, MinDimension, RestartSummary};

#[derive(Clone, Debug)]
pub struct ConjugateSolution {
    pub y: HilbertBimodule,
    /// `d_Y x d_X`.
    pub r: CMat,
    /// `d_X x d_Y`.
    pub rbar: CMat,
}

fn flat(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])))
}

fn frame_tensor(frame: &[CVec]) -> CMat {
    let d = frame.first().map_or(0, |u| u.len());
    let mut m = CMat::zeros(d, d);
    for u in frame {
        m += u * u.map(|z| z.conj()).transpose();
    }
    m
}

/// `Y = Xbar`, `Rbar = sum_i u_i (x) ubar_i` and `R = sum_j vbar_j (x) v_j`
/// for tight frames `u` of `X_B` and `vbar` of `Xbar_A`.
pub fn build_conjugate(x: &HilbertBimodule) -> Result<ConjugateSolution> {
    let y = x.contragredient()?;
    let u = x.tight_frame()?;
    let v = y.tight_frame()?;
    Ok(ConjugateSolution { rbar: frame_tensor(&u.vectors), r: frame_tensor(&v.vectors), y })
}

/// `[(w | e_i)_C]_i` over the basis of an algebraic tensor module.
fn pairings(m: &HilbertBimodule, w: &CVec) -> Vec<AlgebraElement> {
    let d = m.dim();
    let alg = m.right_algebra();
    let rows: Vec<CMat> = m
        .right_gram_blocks()
        .iter()
        .zip(alg.blocks())
        .map(|(g, &n)| {
            let wk = linalg::kron(&CMat::from_column_slice(d, 1, w.as_slice()), &linalg::identity(n));
            wk.adjoint() * g
        })
        .collect();
    (0..d)
        .map(|i| {
            let blocks = rows
                .iter()
                .zip(alg.blocks())
                .map(|(r, &n)| r.view((0, i * n), (n, n)).into_owned())
                .collect();
            AlgebraElement::new(blocks).expect("square blocks")
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugateVerification {
    /// `||(Rbar* (x) 1_X)(1_X (x) R) - 1_X||`.
    pub residual_x: f64,
    /// `||(R* (x) 1_Y)(1_Y (x) Rbar) - 1_Y||`.
    pub residual_y: f64,
    /// `max_e ||e.R - R.e|| / ||R||` over matrix units `e` of `B`.
    pub intertwining_r: f64,
    /// Same for `Rbar` over the units of `A`.
    pub intertwining_rbar: f64,
    pub r_norm: f64,
    pub rbar_norm: f64,
    /// `||R|| ||Rbar||`.
    pub dim_rel: f64,
}

impl ConjugateVerification {
    pub fn pass(&self, tol: f64) -> bool {
        self.residual_x <= tol
            && self.residual_y <= tol
            && self.intertwining_r <= tol
            && self.intertwining_rbar <= tol
    }
}

fn check_solution(x: &HilbertBimodule, sol: &ConjugateSolution) -> Result<()> {
    let y = &sol.y;
    if y.left_algebra() != x.right_algebra() || y.right_algebra() != x.left_algebra() {
        return Err(shape("conjugate module must be a B-A bimodule"));
    }
    if sol.r.shape() != (y.dim(), x.dim()) || sol.rbar.shape() != (x.dim(), y.dim()) {
        return Err(shape(format!(
            "R must be {}x{} and Rbar {}x{}",
            y.dim(),
            x.dim(),
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// Norm of a vector of an algebraic tensor module, `||(w|w)||^{1/2}`.
fn vec_norm(m: &HilbertBimodule, w: &CVec) -> Result<f64> {
    Ok(m.inner_right(w, w)?.norm().sqrt())
}

fn intertwining(m: &HilbertBimodule, w: &CVec) -> Result<f64> {
    let left = m.left_algebra();
    let mut worst = 0.0f64;
    for (k, i, j) in left.units() {
        let e = left.matrix_unit(k, i, j);
        let diff = m.left_act(&e)? * w - m.right_act(&e)? * w;
        worst = worst.max(vec_norm(m, &diff)?);
    }
    Ok(worst / vec_norm(m, w)?.max(1e-300))
}

pub fn verify_conjugate(x: &HilbertBimodule, sol: &ConjugateSolution) -> Result<ConjugateVerification> {
    check_solution(x, sol)?;
    let y = &sol.y;
    let (dx, dy) = (x.dim(), y.dim());
    let xy = x.algebraic_tensor(y)?;
    let yx = y.algebraic_tensor(x)?;
    let rv = flat(&sol.r);
    let rbv = flat(&sol.rbar);
    // (Rbar | e_p (x) f_s)_A and (R | f_s (x) e_p)_B
    let cx = pairings(&xy, &rbv);
    let cy = pairings(&yx, &rv);
    let mut m1 = CMat::zeros(dx, dx);
    for p in 0..dx {
        let mut col = CVec::zeros(dx);
        for s in 0..dy {
            let rs = sol.r.row(s).transpose();
            col += x.left_act(&cx[p * dy + s])? * rs;
        }
        m1.set_column(p, &col);
    }
    let mut m2 = CMat::zeros(dy, dy);
    for s in 0..dy {
        let mut col = CVec::zeros(dy);
        for p in 0..dx {
            let rp = sol.rbar.row(p).transpose();
            col += y.left_act(&cy[s * dx + p])? * rp;
        }
        m2.set_column(s, &col);
    }
    // Norms are taken in the quotient, where the Gram is definite.
    let (xq, yq) = (x.tensor(y)?, y.tensor(x)?);
    let (rq, rbq) = (yq.project(&rv), xq.project(&rbv));
    let r_norm = vec_norm(&yq.module, &rq)?;
    let rbar_norm = vec_norm(&xq.module, &rbq)?;
    Ok(ConjugateVerification {
        residual_x: x.hs_operator_norm(&(m1 - linalg::identity(dx))),
        residual_y: y.hs_operator_norm(&(m2 - linalg::identity(dy))),
        intertwining_r: intertwining(&yq.module, &rq)?,
        intertwining_rbar: intertwining(&xq.module, &rbq)?,
        r_norm,
        rbar_norm,
        dim_rel: r_norm * rbar_norm,
    })
}

/// `R* R` and `Rbar* Rbar`.
pub fn solution_norms(x: &HilbertBimodule, sol: &ConjugateSolution) -> Result<(AlgebraElement, AlgebraElement)> {
    check_solution(x, sol)?;
    let yx = sol.y.algebraic_tensor(x)?;
    let xy = x.algebraic_tensor(&sol.y)?;
    let (rv, rbv) = (flat(&sol.r), flat(&sol.rbar));
    Ok((yx.inner_right(&rv, &rv)?, xy.inner_right(&rbv, &rbv)?))
}

/// `Rbar* (T (x) 1_Y) Rbar` for an operator `T` on `X`.
pub fn compress(x: &HilbertBimodule, y: &HilbertBimodule, rbar: &CMat, t: &CMat) -> Result<AlgebraElement> {
    let xy = x.algebraic_tensor(y)?;
    let v = flat(rbar);
    let tv = linalg::kron(t, &linalg::identity(y.dim())) * &v;
    xy.inner_right(&v, &tv)
}

/// Left inner product determined by a solution:
/// `_A(x | x') = Rbar* (theta_{x,x'} (x) 1_Y) Rbar`. Only the right structure of
/// `x` is used; the result carries the recovered left Gram.
pub fn inner_from_conjugate(x: &HilbertBimodule, y: &HilbertBimodule, rbar: &CMat) -> Result<HilbertBimodule> {
    let xr = x.without_left_gram();
    let yr = y.without_left_gram();
    let xy = xr.algebraic_tensor(&yr)?;
    let v = flat(rbar);
    let basis = xr.basis();
    let id_y = linalg::identity(y.dim());
    let mut gram = Vec::with_capacity(x.dim());
    for p in 0..x.dim() {
        let mut row = Vec::with_capacity(x.dim());
        for q in 0..x.dim() {
            let th = xr.theta(&basis[p], &basis[q])?;
            let tv = linalg::kron(&th, &id_y) * &v;
            row.push(xy.inner_right(&v, &tv)?);
        }
        gram.push(row);
    }
    xr.with_left_gram(gram)
}

/// Moves a solution along an invertible bimodule map `U` on `Y`:
/// `R' = (U (x) 1) R`, `Rbar' = (1 (x) (U*)^{-1}) Rbar`.
pub fn transport(sol: &ConjugateSolution, u: &CMat) -> Result<ConjugateSolution> {
    let ustar = sol.y.adjoint(u);
    let inv = ustar.try_inverse().ok_or_else(|| contract("transport map is not invertible"))?;
    Ok(ConjugateSolution {
        y: sol.y.clone(),
        r: u * &sol.r,
        rbar: &sol.rbar * inv.transpose(),
    })
}

/// Replaces the left inner product by `_A(Q x | y)`. `Q` must commute with
/// both actions and be positive and invertible for the left structure.
pub fn rescale_left(x: &HilbertBimodule, q: &CMat) -> Result<HilbertBimodule> {
    let d = x.dim();
    if q.shape() != (d, d) {
        return Err(shape(format!("Q must be {d}x{d}")));
    }
    let scale = linalg::max_abs(q).max(1.0);
    for g in x.left_action_units().iter().chain(x.right_action_units()) {
        if linalg::max_abs(&(q * g - g * q)) > 1e-9 * scale {
            return Err(contract("Q is not in the relative commutant"));
        }
    }
    let lg = x.left_gram_blocks()?;
    let new: Vec<CMat> = lg
        .iter()
        .zip(x.left_algebra().blocks())
        .map(|(g, &n)| linalg::kron(q, &linalg::identity(n)).transpose() * g)
        .collect();
    let out = x.with_left_gram_blocks(Some(new));
    let rep = out.validate(1e-8);
    for c in rep.checks.iter().filter(|c| c.name.starts_with("left_gram")) {
        if !c.pass {
            return Err(contract(format!(
                "Q is not positive invertible for the left structure ({} = {:.3e})",
                c.name, c.value
            )));
        }
    }
    Ok(out)
}

/// Result of the completely positive characterisation of `l-Ind`.
#[derive(Clone, Debug, Serialize)]
pub struct CpCharacterization {
    /// Central coefficients of `c = l-Ind` on the blocks of `B`.
    pub c: Vec<f64>,
    /// Smallest Choi eigenvalue of `T -> psi_0(c) phi(F(T)) - T`, relative.
    pub min_eig: f64,
    /// For each block of `B` in the support of `c`, the smallest relative
    /// Choi eigenvalue after shrinking that coefficient by `shrink`.
    pub shrunk: Vec<(usize, f64)>,
    pub shrink: f64,
}

impl CpCharacterization {
    pub fn pass(&self, tol: f64) -> bool {
        self.min_eig >= -tol && self.shrunk.iter().all(|&(_, v)| v < -tol)
    }
}

/// Choi spectrum of `T -> psi_0(c) phi(F(T)) - T` on `L(X_B)`.
pub fn psi_phi_f_min_eig(x: &HilbertBimodule, c: &[f64]) -> Result<f64> {
    let frame = x.tight_frame()?;
    let rep = x.rep();
    let b = x.right_algebra();
    let cz = b.central(&c.iter().map(|&v| linalg::c(v)).collect::<Vec<_>>())?;
    let psi = x.right_act(&cz)?;
    let choi = cp::choi_blocks(rep.algebra(), rep.algebra(), |e| {
        let t = rep.from_rep(e);
        let f = extend_f(x, &frame, &t).expect("shape");
        let img = &psi * x.left_act(&f).expect("shape") - &t;
        rep.to_rep(&img)
    });
    let (lo, scale) = cp::choi_spectrum(&choi);
    Ok(lo / scale.max(1.0))
}

/// `psi_0(l-Ind) phi F - id` is completely positive, and shrinking any
/// central coefficient of `l-Ind` breaks this.
pub fn cp_characterization(x: &HilbertBimodule, shrink: f64) -> Result<CpCharacterization> {
    let l = index::left_index(x)?;
    let c: Vec<f64> = l.central_coefficients().iter().map(|z| z.re).collect();
    let min_eig = psi_phi_f_min_eig(x, &c)?;
    let rep_blocks = x.rep().b_blocks();
    let mut shrunk = Vec::new();
    for k in rep_blocks {
        if c[k] <= 0.0 {
            continue;
        }
        let mut c2 = c.clone();
        c2[k] *= 1.0 - shrink;
        shrunk.push((k, psi_phi_f_min_eig(x, &c2)?));
    }
    Ok(CpCharacterization { c, min_eig, shrunk, shrink })
}

/// Smallest relative Choi eigenvalue of `b -> c E(b) - b` on `B` for a
/// conditional expectation and a central `c` given by coefficients.
pub fn expectation_cp_min_eig(e: &crate::constructors::ConditionalExpectation, c: &[f64]) -> Result<f64> {
    let b = &e.inclusion.b;
    let cz = b.central(&c.iter().map(|&v| linalg::c(v)).collect::<Vec<_>>())?;
    let choi = cp::choi_blocks(b, b, |x| &(&cz * &e.inclusion.embed(&e.apply(x))) - x);
    let (lo, scale) = cp::choi_spectrum(&choi);
    Ok(lo / scale.max(1.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct MoritaReport {
    pub phi_injective: bool,
    /// `dim phi(A)` equals `dim L(X_B)`.
    pub phi_onto: bool,
    pub right_full: bool,
    pub imprimitivity: bool,
    /// Central coefficients of the indices for `_A(x|y) := theta_{x,y}`, when
    /// that inner product exists.
    pub theta_r_ind: Option<Vec<f64>>,
    pub theta_l_ind: Option<Vec<f64>>,
    pub trivial_indices: bool,
    /// Minimal dimension of `X` (with its own left inner product, if any).
    pub min_dim: Option<f64>,
    pub consistent: bool,
}

/// Left Gram `_A(e_p|e_q) = phi^{-1}(theta_{e_p,e_q})`, assuming `phi` is an
/// isomorphism onto `L(X_B)`.
fn theta_left_gram(x: &HilbertBimodule) -> Result<Vec<Vec<AlgebraElement>>> {
    let rep = x.rep();
    let a = x.left_algebra();
    let images: Vec<AlgebraElement> = x.left_action_units().iter().map(|m| rep.to_rep(m)).collect();
    let hs = |p: &AlgebraElement, q: &AlgebraElement| -> linalg::C64 {
        p.blocks().iter().zip(q.blocks()).map(|(a, b)| linalg::hs_inner(a, b)).sum()
    };
    let norms: Vec<f64> = images.iter().map(|i| hs(i, i).re).collect();
    let basis = x.basis();
    let mut gram = Vec::with_capacity(x.dim());
    for p in 0..x.dim() {
        let mut row = Vec::with_capacity(x.dim());
        for q in 0..x.dim() {
            let th = rep.to_rep(&x.theta(&basis[p], &basis[q])?);
            let coeffs: Vec<linalg::C64> = images.iter().zip(&norms).map(|(i, n)| hs(i, &th) / n).collect();
            row.push(a.from_flat(&coeffs)?);
        }
        gram.push(row);
    }
    Ok(gram)
}

pub fn morita_check(x: &HilbertBimodule, mindim: Option<&MinDimOptions>) -> Result<MoritaReport> {
    let rep = x.rep();
    let a = x.left_algebra();
    let phi_injective = (0..a.num_blocks())
        .all(|l| x.operator_norm(&x.left_action_units()[a.unit_index(l, 0, 0)]) > 0.5);
    let image_dim: usize = (0..a.num_blocks())
        .filter(|&l| x.operator_norm(&x.left_action_units()[a.unit_index(l, 0, 0)]) > 0.5)
        .map(|l| a.block_size(l).pow(2))
        .sum();
    let phi_onto = image_dim == rep.algebra().dim();
    let right_full = rep.b_blocks().len() == x.right_algebra().num_blocks();
    let imprimitivity = phi_injective && phi_onto && right_full;
    let (mut theta_r, mut theta_l, mut trivial) = (None, None, false);
    if imprimitivity {
        let xt = x.with_left_gram(theta_left_gram(x)?)?;
        let r = index::right_index(&xt)?;
        let l = index::left_index(&xt)?;
        trivial = r.distance(&a.identity()) < 1e-8 && l.distance(&x.right_algebra().identity()) < 1e-8;
        theta_r = Some(r.central_coefficients().iter().map(|z| z.re).collect());
        theta_l = Some(l.central_coefficients().iter().map(|z| z.re).collect());
    }
    let min_dim = match (mindim, x.has_left_gram()) {
        (Some(o), true) => Some(min_dimension(x, o)?.dim_hat),
        (Some(o), false) if imprimitivity => {
            Some(min_dimension(&x.with_left_gram(theta_left_gram(x)?)?, o)?.dim_hat)
        }
        _ => None,
    };
    let mut consistent = imprimitivity == trivial;
    if let Some(m) = min_dim {
        consistent &= imprimitivity == (m < 1.0 + 1e-6);
    }
    Ok(MoritaReport {
        phi_injective,
        phi_onto,
        right_full,
        imprimitivity,
        theta_r_ind: theta_r,
        theta_l_ind: theta_l,
        trivial_indices: trivial,
        min_dim,
        consistent,
    })
}

/// Solution for `Z = X (x)_B Y` built from solutions for `X` and `Y`:
/// the conjugate is `Y2 (x)_B Y1`, `R = i(R1) R2` and `Rbar = j(Rbar2) Rbar1`.
#[derive(Clone, Debug)]
pub struct ComposedConjugate {
    pub z: TensorProduct,
    pub zbar: TensorProduct,
    pub solution: ConjugateSolution,
}

pub fn tensor_conjugate(
    x: &HilbertBimodule,
    sol_x: &ConjugateSolution,
    y: &HilbertBimodule,
    sol_y: &ConjugateSolution,
) -> Result<ComposedConjugate> {
    check_solution(x, sol_x)?;
    check_solution(y, sol_y)?;
    let z = x.tensor(y)?;
    let zbar = sol_y.y.tensor(&sol_x.y)?;
    let (dx, dy) = (x.dim(), y.dim());
    let (d1, d2) = (sol_x.y.dim(), sol_y.y.dim());
    // C[(s,u),(v,t)] = R2[s,t] R1[u,v]
    let mut c = CMat::zeros(d2 * d1, dx * dy);
    for s in 0..d2 {
        for u in 0..d1 {
            for v in 0..dx {
                for t in 0..dy {
                    c[(s * d1 + u, v * dy + t)] = sol_y.r[(s, t)] * sol_x.r[(u, v)];
                }
            }
        }
    }
    // Cbar[(p,q),(s,u)] = Rbar1[p,u] Rbar2[q,s]
    let mut cb = CMat::zeros(dx * dy, d2 * d1);
    for p in 0..dx {
        for q in 0..dy {
            for s in 0..d2 {
                for u in 0..d1 {
                    cb[(p * dy + q, s * d1 + u)] = sol_x.rbar[(p, u)] * sol_y.rbar[(q, s)];
                }
            }
        }
    }
    let conj = |m: &CMat| m.map(|w| w.conj());
    let r = zbar.lift.adjoint() * c * conj(&z.lift);
    let rbar = z.lift.adjoint() * cb * conj(&zbar.lift);
    let solution = ConjugateSolution { y: zbar.module.clone(), r, rbar };
    Ok(ComposedConjugate { z, zbar, solution })
}
