//! Numerical minimisation of `r-I * l-I` over rescalings of the left inner
//! product. The result is an upper estimate of the squared minimal
//! dimension; no claim is made that the infimum is attained.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::bimodule::{FrameSet, HilbertBimodule};
use crate::error::Result;
use crate::exec::Exec;
use crate::index::RelativeCommutant;
use crate::linalg::{self, CMat, C64};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra};

#[derive(Clone, Debug)]
pub struct MinDimOptions {
    pub seed: u64,
    /// Total number of objective evaluations, shared by the restarts.
    pub budget: usize,
    pub restarts: usize,
    /// Central-difference step for numerical gradients.
    pub step: f64,
    pub exec: Exec,
}

impl Default for MinDimOptions {
    fn default() -> Self {
        Self { seed: 0, budget: 5000, restarts: 8, step: 1e-5, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartSummary {
    pub start: f64,
    pub end: f64,
    pub evaluations: usize,
    /// Stopped by the evaluation budget rather than by convergence.
    pub exhausted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinDimension {
    /// `sqrt` of the best `r-I * l-I` found.
    pub dim_hat: f64,
    pub dim_sq_hat: f64,
    /// The rescaling `Q` (on `X`) achieving it: `_A(x|y)' = _A(Qx|y)`.
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub q: CMat,
    /// Best-so-far objective along the winning restart.
    pub trace: Vec<f64>,
    pub restarts: Vec<RestartSummary>,
    pub evaluations: usize,
    pub parameters: usize,
    /// The winning restart ran out of budget before converging.
    pub budget_exhausted: bool,
}

struct Objective<'a> {
    x: &'a HilbertBimodule,
    xbar: HilbertBimodule,
    comm: RelativeCommutant,
    frame: FrameSet,
    frame_bar: FrameSet,
}

impl<'a> Objective<'a> {
    fn new(x: &'a HilbertBimodule) -> Result<Self> {
        let xbar = x.contragredient()?;
        let comm = xbar.relative_commutant();
        let frame = x.tight_frame()?;
        let frame_bar = xbar.tight_frame()?;
        Ok(Self { x, xbar, comm, frame, frame_bar })
    }

    fn alg(&self) -> &MultiMatrixAlgebra {
        &self.comm.algebra
    }

    fn params(&self) -> usize {
        self.alg().dim()
    }

    /// Hermitian, trace-normalised element from real parameters.
    fn hermitian(&self, theta: &[f64]) -> AlgebraElement {
        let alg = self.alg();
        let mut h = alg.zero();
        let mut it = theta.iter();
        let mut total_tr = 0.0;
        let mut total_n = 0usize;
        for k in 0..alg.num_blocks() {
            let m = alg.block_size(k);
            let b = h.block_mut(k);
            for i in 0..m {
                b[(i, i)] = linalg::c(*it.next().unwrap());
                total_tr += b[(i, i)].re;
                for j in (i + 1)..m {
                    let z = C64::new(*it.next().unwrap(), *it.next().unwrap());
                    b[(i, j)] = z;
                    b[(j, i)] = z.conj();
                }
            }
            total_n += m;
        }
        let shift = total_tr / total_n.max(1) as f64;
        for k in 0..alg.num_blocks() {
            let m = alg.block_size(k);
            *h.block_mut(k) -= linalg::identity(m) * linalg::c(shift);
        }
        h
    }

    fn exp_of(&self, h: &AlgebraElement, t: f64) -> AlgebraElement {
        AlgebraElement::from_blocks_unchecked(
            h.blocks().iter().map(|b| linalg::herm_apply(b, |v| (t * v).exp())).collect(),
        )
    }

    /// `Q` on `X` for parameters `theta`.
    fn q(&self, theta: &[f64]) -> CMat {
        if self.params() == 0 {
            return linalg::identity(self.x.dim());
        }
        let qbar = self.comm.element(&self.exp_of(&self.hermitian(theta), 1.0));
        qbar.map(|z| z.conj())
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let x = self.x;
        let q = self.q(theta);
        let mut r = x.left_algebra().zero();
        for u in &self.frame.vectors {
            r = &r + &x.inner_left(&(&q * u), u).expect("shape");
        }
        let m = if self.params() == 0 {
            linalg::identity(x.dim())
        } else {
            self.comm.element(&self.exp_of(&self.hermitian(theta), -0.5))
        };
        let mut l = x.right_algebra().zero();
        for w in &self.frame_bar.vectors {
            let v = &m * w;
            l = &l + &self.xbar.inner_left(&v, &v).expect("shape");
        }
        r.norm() * l.norm()
    }
}

struct Run {
    theta: Vec<f64>,
    start: f64,
    best: f64,
    trace: Vec<f64>,
    evals: usize,
    exhausted: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bfgs(obj: &Objective<'_>, theta0: Vec<f64>, budget: usize, step: f64) -> Run {
    let n = theta0.len();
    let mut evals = 0usize;
    let mut eval = |t: &[f64], evals: &mut usize| {
        *evals += 1;
        obj.value(t)
    };
    let mut x = theta0;
    let mut fx = eval(&x, &mut evals);
    let start = fx;
    let mut trace = vec![fx];
    if n == 0 {
        return Run { theta: x, start, best: fx, trace, evals, exhausted: false };
    }
    let grad = |x: &[f64], evals: &mut usize, eval: &mut dyn FnMut(&[f64], &mut usize) -> f64| {
        let mut g = vec![0.0; n];
        let mut xp = x.to_vec();
        for i in 0..n {
            xp[i] = x[i] + step;
            let fp = eval(&xp, evals);
            xp[i] = x[i] - step;
            let fm = eval(&xp, evals);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * step);
        }
        g
    };
    let mut g = grad(&x, &mut evals, &mut eval);
    let mut h = vec![vec![0.0; n]; n];
    let reset = |h: &mut Vec<Vec<f64>>| {
        for (i, row) in h.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 1.0 } else { 0.0 };
            }
        }
    };
    reset(&mut h);
    let mut exhausted = true;
    while evals + 2 * n + 2 <= budget {
        if dot(&g, &g).sqrt() < 1e-12 {
            exhausted = false;
            break;
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        if dot(&p, &g) >= 0.0 {
            reset(&mut h);
            p = g.iter().map(|v| -v).collect();
        }
        let pn = dot(&p, &p).sqrt();
        if pn > 1.0 {
            p.iter_mut().for_each(|v| *v /= pn);
        }
        let slope = dot(&p, &g);
        let mut alpha = 1.0;
        let mut accepted = None;
        while evals < budget {
            let cand: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + alpha * b).collect();
            let fc = eval(&cand, &mut evals);
            if fc <= fx + 1e-4 * alpha * slope {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                exhausted = false;
                break;
            }
        }
        let Some((xn, fnew)) = accepted else { break };
        if evals + 2 * n > budget {
            x = xn;
            fx = fnew;
            trace.push(fx);
            break;
        }
        let gn = grad(&xn, &mut evals, &mut eval);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let progress = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        trace.push(fx);
        if progress <= 1e-15 * fx.abs() {
            exhausted = false;
            break;
        }
    }
    Run { theta: x, start, best: fx, trace, evals, exhausted }
}

/// Estimates `inf_Q sqrt(r-I * l-I)` over left inner products
/// `_A(Qx|y)` with `Q` positive invertible in the relative commutant.
/// Restart 0 starts from `Q = 1`; the others from seeded random points.
pub fn min_dimension(x: &HilbertBimodule, opts: &MinDimOptions) -> Result<MinDimension> {
    let obj = Objective::new(x)?;
    let n = obj.params();
    let restarts = opts.restarts.max(1);
    let per = (opts.budget / restarts).max(1);
    let runs: Vec<Run> = opts.exec.map(restarts, |i| {
        let theta0 = if i == 0 {
            vec![0.0; n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let dist = Normal::new(0.0, 0.5).expect("valid normal");
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        };
        bfgs(&obj, theta0, per, opts.step)
    });
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.best < runs[best].best {
            best = i;
        }
    }
    let win = &runs[best];
    let mut trace = Vec::with_capacity(win.trace.len());
    let mut so_far = f64::INFINITY;
    for v in &win.trace {
        so_far = so_far.min(*v);
        trace.push(so_far);
    }
    Ok(MinDimension {
        dim_hat: win.best.sqrt(),
        dim_sq_hat: win.best,
        q: obj.q(&win.theta),
        trace,
        restarts: runs
            .iter()
            .map(|r| RestartSummary { start: r.start, end: r.best, evaluations: r.evals, exhausted: r.exhausted })
            .collect(),
        evaluations: runs.iter().map(|r| r.evals).sum(),
        parameters: n,
        budget_exhausted: win.exhausted,
    })
}
