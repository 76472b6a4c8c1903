use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bimodule::HilbertBimodule;
use crate::error::Result;
use crate::linalg::{self, CVec, C64};
use crate::multimatrix::random_matrix;

use super::{cp, extend_f, IndexOptions};

/// Estimated and certified norm-equivalence constants.
///
/// `lambda_prime_hat` is the smallest sampled (then locally refined) ratio
/// `||_A(x|x)|| / ||(x|x)_B||`, so it bounds the true `lambda'` from above;
/// `lambda_hat` is the largest, a lower bound for the true `lambda`. The
/// certified side comes from the CP gap of `phi F` (below `lambda'`) and
/// from `r_num` (above `lambda`).
#[derive(Clone, Debug, Serialize)]
pub struct BestConstants {
    pub lambda_prime_hat: f64,
    pub lambda_hat: f64,
    pub lambda_prime_lower: f64,
    pub lambda_upper: f64,
    pub samples: usize,
    pub seed: u64,
}

const REFINE_STARTS: usize = 4;
const REFINE_SWEEPS: usize = 80;

fn ratio(x: &HilbertBimodule, v: &CVec) -> f64 {
    let r = x.inner_right(v, v).expect("shape").norm();
    let l = x.inner_left(v, v).expect("shape").norm();
    l / r.max(1e-300)
}

/// Pattern search on the coordinates of `v`, minimising `sign * ratio`.
fn refine(x: &HilbertBimodule, v0: &CVec, sign: f64) -> f64 {
    let d = v0.len();
    let mut v = v0.normalize();
    let mut best = sign * ratio(x, &v);
    let mut h = 0.5 / (d as f64).sqrt();
    let dirs = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    for _ in 0..REFINE_SWEEPS {
        let mut improved = false;
        for p in 0..d {
            for dir in dirs {
                let mut cand = v.clone();
                cand[p] += dir * h;
                let nrm = cand.norm();
                if nrm < 1e-12 {
                    continue;
                }
                let val = sign * ratio(x, &cand);
                if val < best - 1e-15 * best.abs() {
                    best = val;
                    v = cand / linalg::c(nrm);
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
            if h < 1e-8 {
                break;
            }
        }
    }
    sign * best
}

pub(crate) fn best_constants(x: &HilbertBimodule, r_num: f64, opts: &IndexOptions) -> Result<BestConstants> {
    let d = x.dim();
    let n = opts.samples.max(1);
    let seed = opts.seed;
    let draws: Vec<(CVec, f64)> = opts.exec.map(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let v = random_matrix(&mut rng, d, 1).column(0).into_owned();
        let r = ratio(x, &v);
        (v, r)
    });
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| draws[a].1.total_cmp(&draws[b].1).then(a.cmp(&b)));
    let k = REFINE_STARTS.min(n);
    let starts: Vec<(usize, f64)> = order[..k]
        .iter()
        .map(|&i| (i, 1.0))
        .chain(order[n - k..].iter().map(|&i| (i, -1.0)))
        .collect();
    let refined = opts.exec.map(starts.len(), |s| refine(x, &draws[starts[s].0].0, starts[s].1));
    let lambda_prime_hat = refined[..k].iter().copied().fold(draws[order[0]].1, f64::min);
    let lambda_hat = refined[k..].iter().copied().fold(draws[order[n - 1]].1, f64::max);

    let frame = x.tight_frame()?;
    let rep = x.rep();
    let phi_f = |e: &crate::multimatrix::AlgebraElement| {
        let t = rep.from_rep(e);
        let f = extend_f(x, &frame, &t).expect("shape");
        rep.to_rep(&x.left_act(&f).expect("shape"))
    };
    let lambda_prime_lower = cp::cp_gap(rep.algebra(), phi_f, 1e-10);
    Ok(BestConstants {
        lambda_prime_hat,
        lambda_hat,
        lambda_prime_lower,
        lambda_upper: r_num,
        samples: n,
        seed,
    })
}
