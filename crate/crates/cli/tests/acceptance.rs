//! Acceptance suite. Runs without the libtest harness so that one PASS/FAIL
//! line per criterion is always printed; exits non-zero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use bimod_core::conjugation::{self, MinDimOptions};
use bimod_core::constructors::{self, ConditionalExpectation, Graph, Inclusion};
use bimod_core::index::{self, cp, BasicConstruction, IndexOptions};
use bimod_core::linalg::{self, CMat, CVec, C64};
use bimod_core::multimatrix::MultiMatrixAlgebra;
use bimod_core::random::{random_bimodule, random_positive_definite, zoo, Shape};
use bimod_core::{AlgebraElement, HilbertBimodule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAM_NORM_TOL: f64 = 1e-8;
const HILBERT_TOL: f64 = 1e-9;
const CONJUGATE_TOL: f64 = 1e-8;
const ROUND_TRIP_TOL: f64 = 1e-8;
const CHOI_TOL: f64 = 1e-8;
const SHRINK: f64 = 1e-3;
const CP_GAP_TOL: f64 = 1e-6;
const GRAPH_TOL: f64 = 1e-10;
const MORITA_TOL: f64 = 1e-10;
const MIN_DIM_UNIT_TOL: f64 = 1e-6;
const MIN_DIM_TOL: f64 = 1e-3;
const MIN_DIM_BUDGET: usize = 5000;
const BASIC_TOL: f64 = 1e-8;
const COMPOSED_TOL: f64 = 1e-7;
const MAX_COMPOSITE_DIM: usize = 32;
const NORM_BOUND_SLACK: f64 = 1e-9;
const BASIS_STEP_TOL: f64 = 1e-12;
const FRAME_TOL: f64 = 1e-8;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

fn random_instance(r: &mut ChaCha8Rng, max_dim: usize) -> HilbertBimodule {
    let shape = Shape::random(r, 3, 3, 2, max_dim);
    random_bimodule(r, &shape, false).expect("random shapes are valid")
}

fn max_block_gap(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| linalg::max_abs(&(x - y))).fold(0.0, f64::max)
}

fn gram_norm_formula() -> Verdict {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let x = random_instance(&mut r, 16);
        let n = r.random_range(1..=4);
        let xs: Vec<CVec> = (0..n).map(|_| random_vec(&mut r, x.dim())).collect();
        let ys: Vec<CVec> = (0..n).map(|_| random_vec(&mut r, x.dim())).collect();
        let formula = x.rank_one_sum_norm(&xs, &ys).unwrap();
        let direct = x.operator_norm(&x.theta_sum(&xs, &ys).unwrap());
        worst = worst.max((formula - direct).abs() / direct.max(1e-300));
    }
    verdict(worst <= GRAM_NORM_TOL, format!("200 instances, max relative gap {worst:.2e} <= {GRAM_NORM_TOL:.0e}"))
}

fn hilbert_space_traces() -> Verdict {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.random_range(1..=16);
        let t = random_positive_definite(&mut r, n, 1.0);
        let x = constructors::from_hilbert_space(n, &t).unwrap();
        let tr = t.trace().re;
        let tr_inv = t.clone().try_inverse().unwrap().trace().re;
        let ri = index::right_index(&x).unwrap().block(0)[(0, 0)].re;
        let li = index::left_index(&x).unwrap().block(0)[(0, 0)].re;
        worst = worst.max((ri - tr).abs() / tr).max((li - tr_inv).abs() / tr_inv);
    }
    verdict(worst <= HILBERT_TOL, format!("50 matrices, max relative error {worst:.2e} <= {HILBERT_TOL:.0e}"))
}

fn conjugate_identities() -> Verdict {
    let mut residual = 0.0f64;
    let mut ids = 0.0f64;
    let mut norms = 0.0f64;
    let mut r = rng(103);
    let mut cases = zoo(11);
    cases.extend((0..10).map(|i| (format!("extra{i}"), random_instance(&mut r, 16))));
    for (_, x) in &cases {
        let sol = conjugation::build_conjugate(x).unwrap();
        let v = conjugation::verify_conjugate(x, &sol).unwrap();
        residual = residual.max(v.residual_x).max(v.residual_y).max(v.intertwining_r).max(v.intertwining_rbar);
        let (rr, rbrb) = conjugation::solution_norms(x, &sol).unwrap();
        let l = index::left_index(x).unwrap();
        let ri = index::right_index(x).unwrap();
        ids = ids.max(rr.distance(&l)).max(rbrb.distance(&ri));
        norms = norms.max((v.rbar_norm.powi(2) - ri.norm()).abs() / ri.norm());
    }
    let pass = residual <= CONJUGATE_TOL && ids <= CONJUGATE_TOL && norms <= CONJUGATE_TOL;
    verdict(
        pass,
        format!(
            "{} bimodules, residual {residual:.2e}, R*R/Rbar*Rbar vs indices {ids:.2e}, |Rbar|^2 vs r_num {norms:.2e} (tol {CONJUGATE_TOL:.0e})",
            cases.len()
        ),
    )
}

fn inner_product_round_trip() -> Verdict {
    let mut r = rng(104);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let x = random_instance(&mut r, 16);
        let sol = conjugation::build_conjugate(&x).unwrap();
        let back = conjugation::inner_from_conjugate(&x, &sol.y, &sol.rbar).unwrap();
        worst = worst.max(max_block_gap(back.left_gram_blocks().unwrap(), x.left_gram_blocks().unwrap()));
    }
    verdict(worst <= ROUND_TRIP_TOL, format!("30 bimodules, max entry error {worst:.2e} <= {ROUND_TRIP_TOL:.0e}"))
}

fn flip_quasi_basis_index(e: &ConditionalExpectation, r: &mut ChaCha8Rng) -> (AlgebraElement, f64) {
    let b = &e.inclusion.b;
    let one = b.identity();
    let mut flip = b.zero();
    flip.block_mut(0)[(0, 1)] = C64::new(1.0, 0.0);
    flip.block_mut(0)[(1, 0)] = C64::new(1.0, 0.0);
    let basis = [one, flip];
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = b.random_element(r);
        let mut sum = b.zero();
        for u in &basis {
            sum = &sum + &(u * &e.inclusion.embed(&e.apply(&(&u.adjoint() * &v))));
        }
        worst = worst.max(sum.distance(&v));
    }
    let ind = basis.iter().fold(b.zero(), |acc, u| &acc + &(u * &u.adjoint()));
    (ind, worst)
}

fn expectation_index() -> Verdict {
    let b = MultiMatrixAlgebra::new(vec![2]).unwrap();
    let inc = Inclusion::new(MultiMatrixAlgebra::diagonal(2).unwrap(), b.clone(), vec![vec![1], vec![1]]).unwrap();
    let e = ConditionalExpectation::new(inc, vec![vec![1.0], vec![1.0]]).unwrap();
    let (oracle, reconstruction) = flip_quasi_basis_index(&e, &mut rng(105));
    let eb = constructors::from_expectation(&e).unwrap();
    let ind = index::right_index(&eb.x).unwrap();
    let c: Vec<f64> = ind.central_coefficients().iter().map(|z| z.re).collect();
    let at_c = conjugation::expectation_cp_min_eig(&e, &c).unwrap();
    let below: Vec<f64> = c.iter().map(|v| v * (1.0 - SHRINK)).collect();
    let at_below = conjugation::expectation_cp_min_eig(&e, &below).unwrap();
    let gap = cp::cp_gap_bisect(&b, |v| e.inclusion.embed(&e.apply(v)), 4.0, 200, 1e-12);
    let pass = ind.distance(&oracle) <= 1e-12
        && reconstruction <= 1e-12
        && at_c >= -CHOI_TOL
        && at_below < -CHOI_TOL
        && (gap - 0.5).abs() <= CP_GAP_TOL;
    verdict(
        pass,
        format!(
            "c = {c:?} (quasi-basis {:.1}), Choi min at c {at_c:.1e}, at {:.3}c {at_below:.1e}, CP gap {gap:.9}",
            oracle.block(0)[(0, 0)].re,
            1.0 - SHRINK
        ),
    )
}

fn random_graph(r: &mut ChaCha8Rng) -> (Vec<String>, Vec<(String, String, f64)>) {
    let n = r.random_range(1..=12);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let forced = j == (i + 1) % n;
            if forced || r.random_bool(0.25) {
                edges.push((names[i].clone(), names[j].clone(), r.random_range(0.1..5.0)));
            }
        }
    }
    (names, edges)
}

fn graph_closed_forms() -> Verdict {
    let mut r = rng(106);
    let mut engine_gap = 0.0f64;
    let mut maxima_gap = 0.0f64;
    for _ in 0..50 {
        let (names, edges) = random_graph(&mut r);
        let n = names.len();
        let mut right = vec![0.0; n];
        let mut left = vec![0.0; n];
        for (s, t, w) in &edges {
            let (i, j) = (names.iter().position(|v| v == s).unwrap(), names.iter().position(|v| v == t).unwrap());
            right[i] += w;
            left[j] += 1.0 / w;
        }
        let g = Graph::new(names, edges).unwrap();
        let cf = g.closed_form();
        let x = g.bimodule().unwrap();
        let coeffs = |e: AlgebraElement| -> Vec<f64> { e.central_coefficients().iter().map(|z| z.re).collect() };
        let er = coeffs(index::right_index(&x).unwrap());
        let el = coeffs(index::left_index(&x).unwrap());
        for k in 0..n {
            engine_gap = engine_gap
                .max((er[k] - right[k]).abs())
                .max((el[k] - left[k]).abs())
                .max((cf.right[k] - right[k]).abs())
                .max((cf.left[k] - left[k]).abs());
        }
        let c1 = right.iter().copied().fold(0.0, f64::max);
        let c2 = left.iter().copied().fold(0.0, f64::max);
        maxima_gap = maxima_gap.max((cf.c1 - c1).abs() / c1).max((cf.c2 - c2).abs() / c2);
    }
    let pass = engine_gap <= GRAPH_TOL && maxima_gap <= 4.0 * f64::EPSILON;
    verdict(pass, format!("50 graphs, index entries {engine_gap:.2e} <= {GRAPH_TOL:.0e}, maxima rel {maxima_gap:.1e}"))
}

fn matrix_algebra_equivalence() -> Verdict {
    let opts = MinDimOptions { budget: 2000, ..MinDimOptions::default() };
    let mut idx = 0.0f64;
    let mut dim = 0.0f64;
    let mut morita = true;
    for n in 1..=4 {
        let x = constructors::imprimitivity(n).unwrap();
        idx = idx
            .max(index::right_index(&x).unwrap().distance(&x.left_algebra().identity()))
            .max(index::left_index(&x).unwrap().distance(&x.right_algebra().identity()));
        let m = conjugation::morita_check(&x, Some(&opts)).unwrap();
        morita &= m.imprimitivity && m.trivial_indices && m.consistent;
        dim = dim.max((m.min_dim.unwrap() - 1.0).abs());
    }
    let pass = idx <= MORITA_TOL && morita && dim <= MIN_DIM_UNIT_TOL;
    verdict(pass, format!("n = 1..4, |Ind - 1| {idx:.1e}, morita {morita}, |dim - 1| {dim:.1e}"))
}

fn hilbert_min_dimension() -> Verdict {
    let mut r = rng(108);
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [2usize, 3, 5] {
        let t = random_positive_definite(&mut r, n, 1.0);
        let x = constructors::from_hilbert_space(n, &t).unwrap();
        let opts = MinDimOptions { budget: MIN_DIM_BUDGET, ..MinDimOptions::default() };
        let m = conjugation::min_dimension(&x, &opts).unwrap();
        let err = (m.dim_hat - n as f64).abs();
        pass &= err <= MIN_DIM_TOL && m.evaluations <= MIN_DIM_BUDGET;
        parts.push(format!("n={n}: {:.6} ({} evals)", m.dim_hat, m.evaluations));
    }
    verdict(pass, parts.join(", "))
}

fn fiber_bounds() -> Verdict {
    let mut r = rng(109);
    let opts = IndexOptions { samples: 1000, ..IndexOptions::default() };
    let mut holds = true;
    for _ in 0..30 {
        let x = random_instance(&mut r, 12);
        let rep = index::index_report(&x, &opts).unwrap();
        holds &= index::fiber_decomposition(&x, &rep.r_coeffs, rep.constants.lambda_prime_hat).holds;
    }
    let mut equal = true;
    for n in 1..=4 {
        let x = constructors::from_hilbert_space(n, &linalg::identity(n)).unwrap();
        let rep = index::index_report(&x, &opts).unwrap();
        let f = index::fiber_decomposition(&x, &rep.r_coeffs, rep.constants.lambda_prime_hat);
        equal &= f.fibers.iter().all(|fib| fib.dim as u64 == fib.bound && fib.dim == n * n);
    }
    verdict(holds && equal, format!("bound holds on 30 bimodules: {holds}; equality for C^n, T = I, n = 1..4: {equal}"))
}

fn basic_construction() -> Verdict {
    let mut r = rng(110);
    let mut cases: Vec<HilbertBimodule> = zoo(11).into_iter().map(|(_, x)| x).collect();
    cases.extend((0..6).map(|_| random_instance(&mut r, 12)));
    let opts = IndexOptions { samples: 200, ..IndexOptions::default() };
    let (mut idem, mut cpm, mut pp) = (0.0f64, f64::INFINITY, f64::INFINITY);
    for (i, x) in cases.iter().enumerate() {
        let consts = index::best_constants(x, &opts).unwrap();
        let bc = BasicConstruction::new(x).unwrap();
        // The certified constant: sampled estimates sit above the true one.
        let c = bc.checks(consts.lambda_prime_lower, 50, 1000 + i as u64).unwrap();
        idem = idem.max(c.idempotent).max(c.bimodular);
        cpm = cpm.min(c.cp_min_eig);
        pp = pp.min(c.pp_min_eig);
    }
    let pass = idem <= BASIC_TOL && cpm >= -BASIC_TOL && pp >= -BASIC_TOL;
    verdict(
        pass,
        format!("{} bimodules x 50 samples, idempotent/bimodular {idem:.1e}, Choi min {cpm:.1e}, PP min {pp:.1e}", cases.len()),
    )
}

fn composed_conjugates() -> Verdict {
    let mut r = rng(111);
    let (mut res, mut bound) = (0.0f64, f64::NEG_INFINITY);
    let mut pairs = 0;
    while pairs < 20 {
        let sx = Shape::random(&mut r, 2, 2, 2, 8);
        let sy = Shape::random_with_left(&mut r, &sx.b, 2, 2, 2, 8);
        let x = random_bimodule(&mut r, &sx, false).unwrap();
        let y = random_bimodule(&mut r, &sy, false).unwrap();
        // Verification tensors the composite with its conjugate densely.
        if x.tensor(&y).unwrap().module.dim() > MAX_COMPOSITE_DIM {
            continue;
        }
        pairs += 1;
        let (solx, soly) = (conjugation::build_conjugate(&x).unwrap(), conjugation::build_conjugate(&y).unwrap());
        let vx = conjugation::verify_conjugate(&x, &solx).unwrap();
        let vy = conjugation::verify_conjugate(&y, &soly).unwrap();
        let comp = conjugation::tensor_conjugate(&x, &solx, &y, &soly).unwrap();
        let v = conjugation::verify_conjugate(&comp.z.module, &comp.solution).unwrap();
        res = res.max(v.residual_x).max(v.residual_y).max(v.intertwining_r).max(v.intertwining_rbar);
        bound = bound.max(v.r_norm - vx.r_norm * vy.r_norm).max(v.rbar_norm - vx.rbar_norm * vy.rbar_norm);
    }
    let pass = res <= COMPOSED_TOL && bound <= NORM_BOUND_SLACK;
    verdict(pass, format!("20 pairs, residual {res:.2e} <= {COMPOSED_TOL:.0e}, max(|R| - |R1||R2|) {bound:.2e}"))
}

fn generalized_basis() -> Verdict {
    let mut r = rng(112);
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..100 {
        let x = random_instance(&mut r, 10);
        let n = r.random_range(1..=6);
        let xs: Vec<CVec> = (0..n).map(|_| random_vec(&mut r, x.dim())).collect();
        let (_, t) = x.generalized_basis_step(&xs).unwrap();
        let dev = t - linalg::identity(x.dim());
        for xi in &xs {
            let v = &dev * xi;
            let sq = x.inner_right(&v, &v).unwrap().norm();
            excess = excess.max(sq - 1.0 / (4.0 * n as f64));
        }
    }
    let mut order = f64::INFINITY;
    for _ in 0..50 {
        let x = random_instance(&mut r, 10);
        let n = r.random_range(1..=4);
        let m = n + r.random_range(1..=3);
        let nu: Vec<CVec> = (0..m).map(|_| random_vec(&mut r, x.dim())).collect();
        let (_, t_mu) = x.generalized_basis_step(&nu[..n]).unwrap();
        let (_, t_nu) = x.generalized_basis_step(&nu).unwrap();
        order = order.min(x.rep().min_eigenvalue(&(t_nu - t_mu)));
    }
    let pass = excess <= BASIS_STEP_TOL && order >= -BASIS_STEP_TOL;
    verdict(pass, format!("100 families, max(|(T-1)x|^2 - 1/4n) {excess:.2e}; 50 chains, min eig(T_nu - T_mu) {order:.2e}"))
}

fn basis_independence() -> Verdict {
    let mut r = rng(113);
    let mut worst = 0.0f64;
    let mut cases: Vec<HilbertBimodule> = zoo(11).into_iter().map(|(_, x)| x).collect();
    cases.extend((0..10).map(|_| random_instance(&mut r, 16)));
    for x in &cases {
        let frames = [
            x.tight_frame().unwrap(),
            x.random_tight_frame(&mut r, 1).unwrap(),
            x.random_tight_frame(&mut r, 3).unwrap(),
        ];
        let sums: Vec<AlgebraElement> = frames
            .iter()
            .map(|f| {
                f.vectors.iter().fold(x.left_algebra().zero(), |acc, u| &acc + &x.inner_left(u, u).unwrap())
            })
            .collect();
        for s in &sums[1..] {
            worst = worst.max(max_block_gap(s.blocks(), sums[0].blocks()));
        }
    }
    verdict(worst <= FRAME_TOL, format!("{} bimodules, 3 frames each, max entry gap {worst:.2e}", cases.len()))
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

fn cli_determinism() -> Verdict {
    let runs: Vec<Vec<String>> = vec![
        vec!["validate".into(), fixture("random_bimodule.json")],
        vec!["validate".into(), fixture("algebra.json")],
        vec!["index".into(), fixture("hilbert_T.json")],
        vec!["index".into(), fixture("random_bimodule.json")],
        vec!["conjugate".into(), fixture("random_bimodule.json")],
        vec!["verify".into(), fixture("hilbert_I2.json"), fixture("good_solution.json")],
        vec!["verify".into(), fixture("hilbert_I2.json"), fixture("bad_solution.json")],
        vec!["mindim".into(), fixture("random_bimodule.json")],
        vec!["basic".into(), fixture("random_bimodule.json")],
        vec!["fibers".into(), fixture("hilbert_I2.json")],
        vec!["morita".into(), fixture("mn_bimodule.json")],
        vec!["tensor".into(), fixture("random_bimodule.json"), fixture("pair_y.json")],
        vec!["graph".into(), fixture("graph_cycle.json")],
        vec!["graph".into(), fixture("negative_weight.json")],
        vec!["expectation".into(), fixture("expectation.json")],
        vec!["hilbert".into(), fixture("hilbert_T.json")],
        vec!["hilbert".into(), fixture("malformed.json")],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let once = |seed: &str| {
            Command::new(env!("CARGO_BIN_EXE_bimod"))
                .args(args)
                .args(["--seed", seed, "--no-timing"])
                .output()
                .expect("binary runs")
                .stdout
        };
        if once("5") != once("5") {
            differing.push(args[0].clone());
        }
    }
    verdict(differing.is_empty(), format!("{} invocations run twice, differing: {differing:?}", runs.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("A01", "Gram formula for norms of rank-one sums", gram_norm_formula),
        ("A02", "Hilbert space indices are Tr T and Tr T^-1", hilbert_space_traces),
        ("A03", "conjugate equations and R*R, Rbar*Rbar identities", conjugate_identities),
        ("A04", "left inner product recovered from a solution", inner_product_round_trip),
        ("A05", "diagonal expectation: minimal c and CP gap", expectation_index),
        ("A06", "weighted graph closed forms", graph_closed_forms),
        ("A07", "C^n over M_n: identities and dimension one", matrix_algebra_equivalence),
        ("A08", "minimal dimension of C^n is n", hilbert_min_dimension),
        ("A09", "fiber dimension bound", fiber_bounds),
        ("A10", "basic construction expectation", basic_construction),
        ("A11", "composed conjugate solutions", composed_conjugates),
        ("A12", "generalized basis step", generalized_basis),
        ("A13", "index element independent of the tight frame", basis_independence),
        ("A14", "CLI reports are byte-identical", cli_determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let t = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {id} {name}: {} [{:.2}s]", v.detail, t.elapsed().as_secs_f64());
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} failed, total {:.1}s", failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
