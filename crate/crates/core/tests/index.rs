use bimod_core::constructors::{self, ConditionalExpectation, Graph, Inclusion};
use bimod_core::index::{self, cp, BasicConstruction, IndexOptions};
use bimod_core::linalg::{self, CMat};
use bimod_core::multimatrix::MultiMatrixAlgebra;
use bimod_core::random::{random_bimodule, random_positive_definite, Shape};
use bimod_core::HilbertBimodule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn opts(samples: usize) -> IndexOptions {
    IndexOptions { samples, ..IndexOptions::default() }
}

/// Null space dimension of the commutator system, computed directly.
fn commutant_dim_oracle(x: &HilbertBimodule) -> usize {
    let d = x.dim();
    let gens: Vec<&CMat> = x.left_action_units().iter().chain(x.right_action_units()).collect();
    let id = linalg::identity(d);
    let mut gram = CMat::zeros(d * d, d * d);
    for g in gens {
        // vec(T G - G T) = (G^T (x) I - I (x) G) vec(T), column-major vec
        let l = linalg::kron(&g.transpose(), &id) - linalg::kron(&id, g);
        gram += l.adjoint() * l;
    }
    let (vals, _) = linalg::heig(&gram);
    let top = vals.last().copied().unwrap_or(1.0).max(1.0);
    vals.iter().filter(|&&v| v < 1e-9 * top).count()
}

#[test]
fn hilbert_space_indices_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..5 {
        let t = random_positive_definite(&mut rng, n, 1.0);
        let x = constructors::from_hilbert_space(n, &t).unwrap();
        let rep = index::index_report(&x, &opts(2000)).unwrap();
        let tr = t.trace().re;
        let tr_inv = t.clone().try_inverse().unwrap().trace().re;
        assert!((rep.r_num - tr).abs() < 1e-9 * tr);
        assert!((rep.l_num - tr_inv).abs() < 1e-9 * tr_inv);
        assert!((rep.ind_coeffs[0] - tr * tr_inv).abs() < 1e-9 * tr * tr_inv);
        assert!(rep.frame_agreement < 1e-9);
        let (vals, _) = linalg::heig(&t);
        let c = &rep.constants;
        assert!(c.lambda_prime_hat >= vals[0] - 1e-9 && c.lambda_prime_hat - vals[0] < 1e-6 * vals[0], "{c:?} {vals:?}");
        assert!(c.lambda_hat <= vals[n - 1] + 1e-9 && vals[n - 1] - c.lambda_hat < 1e-6 * vals[n - 1]);
        assert!((c.lambda_prime_lower - 1.0 / tr_inv).abs() < 1e-8);
        assert!(c.lambda_prime_lower <= c.lambda_prime_hat + 1e-12);
        assert!(c.lambda_hat <= c.lambda_upper + 1e-12);
    }
}

#[test]
fn graph_indices_match_closed_form() {
    let g = Graph::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![
            ("a".into(), "b".into(), 0.5),
            ("a".into(), "c".into(), 2.0),
            ("b".into(), "c".into(), 1.5),
            ("c".into(), "a".into(), 3.0),
            ("c".into(), "c".into(), 0.25),
        ],
    )
    .unwrap();
    let x = g.bimodule().unwrap();
    let rep = index::index_report(&x, &opts(500)).unwrap();
    let cf = g.closed_form();
    for (a, b) in rep.r_coeffs.iter().zip(&cf.right) {
        assert!((a - b).abs() < 1e-10);
    }
    for (a, b) in rep.l_coeffs.iter().zip(&cf.left) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((rep.r_num - cf.c1).abs() < 1e-10 && (rep.l_num - cf.c2).abs() < 1e-10);
}

#[test]
fn diagonal_compression_has_index_two() {
    let b = MultiMatrixAlgebra::new(vec![2]).unwrap();
    let inc = Inclusion::new(MultiMatrixAlgebra::diagonal(2).unwrap(), b, vec![vec![1], vec![1]]).unwrap();
    let e = ConditionalExpectation::new(inc, vec![vec![1.0], vec![1.0]]).unwrap();
    let eb = constructors::from_expectation(&e).unwrap();
    let r = index::right_index(&eb.x).unwrap();
    assert!(r.distance(&eb.x.left_algebra().identity().scale_re(2.0)) < 1e-10);
    // E - c id is CP exactly up to c = 1/2
    let alg = e.inclusion.b.clone();
    let f = |x: &bimod_core::AlgebraElement| e.inclusion.embed(&e.apply(x));
    let gap = cp::cp_gap(&alg, f, 1e-12);
    let gap_b = cp::cp_gap_bisect(&alg, f, 4.0, 80, 1e-12);
    assert!((gap - 0.5).abs() < 1e-9 && (gap_b - 0.5).abs() < 1e-9, "{gap} {gap_b}");
}

#[test]
fn commutant_matches_direct_null_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..8 {
        let shape = Shape::random(&mut rng, 3, 2, 2, 10);
        let x = random_bimodule(&mut rng, &shape, false).unwrap();
        let comm = x.relative_commutant();
        assert_eq!(comm.dim(), commutant_dim_oracle(&x), "{shape:?}");
        let expected: usize = shape.multiplicity.iter().flatten().map(|m| m * m).sum();
        assert_eq!(comm.dim(), expected);
        for u in &comm.units {
            for g in x.left_action_units().iter().chain(x.right_action_units()) {
                assert!(linalg::max_abs(&(u * g - g * u)) < 1e-8);
            }
        }
    }
}

#[test]
fn fiber_bound_equality_at_identity() {
    for n in 1..5 {
        let x = constructors::from_hilbert_space(n, &linalg::identity(n)).unwrap();
        let r = index::index_report(&x, &opts(200)).unwrap();
        let f = index::fiber_decomposition(&x, &r.r_coeffs, r.constants.lambda_prime_hat);
        assert_eq!(f.fibers[0].dim, n * n);
        assert_eq!(f.fibers[0].bound, (n * n) as u64);
        assert!(f.holds);
    }
}

#[test]
fn basic_construction_on_random_bimodules() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..6 {
        let shape = Shape::random(&mut rng, 3, 2, 2, 12);
        let x = random_bimodule(&mut rng, &shape, false).unwrap();
        let consts = index::best_constants(&x, &opts(3000)).unwrap();
        let bc = BasicConstruction::new(&x).unwrap();
        let checks = bc.checks(consts.lambda_prime_hat, 20, 1).unwrap();
        assert!(checks.pass(1e-8), "{checks:?}");
    }
}
