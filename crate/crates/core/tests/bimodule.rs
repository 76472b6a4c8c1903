use bimod_core::constructors::{self, Graph};
use bimod_core::linalg::{self, CMat, CVec};
use bimod_core::multimatrix::{random_matrix, MultiMatrixAlgebra};
use bimod_core::HilbertBimodule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(r: &mut ChaCha8Rng, d: usize) -> CVec {
    random_matrix(r, d, 1).column(0).into_owned()
}

fn zoo() -> Vec<(String, HilbertBimodule)> {
    bimod_core::random::zoo(11)
}

#[test]
fn zoo_validates() {
    for (name, x) in zoo() {
        let rep = x.validate(TOL);
        assert!(rep.pass(), "{name}: {:?}", rep.failures());
        let c = x.contragredient().unwrap();
        let rep = c.validate(TOL);
        assert!(rep.pass(), "{name} contragredient: {:?}", rep.failures());
        let a = x.amplify(2).unwrap();
        let rep = a.validate(TOL);
        assert!(rep.pass(), "{name} amplified: {:?}", rep.failures());
    }
}

#[test]
fn rep_is_a_star_isomorphism() {
    let mut r = rng(5);
    for (name, x) in zoo() {
        let rep = x.rep();
        let units = rep.units();
        let alg = rep.algebra().clone();
        let d = x.dim();
        assert!(alg.num_blocks() <= x.right_algebra().num_blocks(), "{name}");
        // sum r_k n_k = d
        let total: usize = rep.b_blocks().iter().zip(alg.blocks()).map(|(&k, &r)| r * x.right_algebra().block_size(k)).sum();
        assert_eq!(total, d, "{name}");
        let e = alg.random_element(&mut r);
        let f = alg.random_element(&mut r);
        let (te, tf) = (rep.from_rep(&e), rep.from_rep(&f));
        assert!(rep.to_rep(&(&te * &tf)).distance(&(&e * &f)) < 1e-8 * (1.0 + e.norm() * f.norm()), "{name}");
        // (T x | y) = (x | T^dagger y)
        let (xv, yv) = (random_vec(&mut r, d), random_vec(&mut r, d));
        let lhs = x.inner_right(&(&te * &xv), &yv).unwrap();
        let rhs = x.inner_right(&xv, &(x.adjoint(&te) * &yv)).unwrap();
        assert!(lhs.distance(&rhs) < 1e-8 * (1.0 + lhs.norm()), "{name}");
        // units commute with the right action
        for u in &units {
            for rb in x.right_action_units() {
                assert!(linalg::max_abs(&(u * rb - rb * u)) < 1e-8, "{name}");
            }
        }
    }
}

#[test]
fn tight_frames_and_gram_formula() {
    let mut r = rng(9);
    for (name, x) in zoo() {
        let f = x.tight_frame().unwrap();
        assert!(x.frame_defect(&f).unwrap() < 1e-9, "{name}");
        let g = x.random_tight_frame(&mut r, 2).unwrap();
        assert!(x.frame_defect(&g).unwrap() < 1e-9, "{name}");
        let d = x.dim();
        for n in 1..4 {
            let xs: Vec<CVec> = (0..n).map(|_| random_vec(&mut r, d)).collect();
            let ys: Vec<CVec> = (0..n).map(|_| random_vec(&mut r, d)).collect();
            let direct = x.operator_norm(&x.theta_sum(&xs, &ys).unwrap());
            let formula = x.rank_one_sum_norm(&xs, &ys).unwrap();
            assert!((direct - formula).abs() <= 1e-8 * direct.max(1.0), "{name}: {direct} vs {formula}");
        }
    }
}

#[test]
fn tensor_with_unit_bimodule_is_trivial() {
    for (name, x) in zoo() {
        let iota = constructors::identity_bimodule(x.right_algebra()).unwrap();
        let t = x.tensor(&iota).unwrap();
        assert_eq!(t.module.dim(), x.dim(), "{name}");
        assert!(t.module.validate(TOL).pass(), "{name}: {:?}", t.module.validate(TOL).failures());
        let c = x.contragredient().unwrap();
        let xx = x.tensor(&c).unwrap();
        assert!(xx.module.validate(1e-8).pass(), "{name}: {:?}", xx.module.validate(1e-8).failures());
    }
}

#[test]
fn contragredient_is_an_involution() {
    for (name, x) in zoo() {
        let cc = x.contragredient().unwrap().contragredient().unwrap();
        for (a, b) in x.right_gram_blocks().iter().zip(cc.right_gram_blocks()) {
            assert!(linalg::max_abs(&(a - b)) < 1e-14, "{name}");
        }
        for (a, b) in x.left_action_units().iter().zip(cc.left_action_units()) {
            assert!(linalg::max_abs(&(a - b)) < 1e-14, "{name}");
        }
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    let t = CMat::from_row_slice(2, 2, &[linalg::c(1.0), linalg::c(0.0), linalg::c(0.0), linalg::c(-1.0)]);
    assert!(constructors::from_hilbert_space(2, &t).is_err());
    let g = Graph::new(vec!["a".into(), "b".into()], vec![("a".into(), "b".into(), 1.0)]);
    assert!(g.is_err());
    let g = Graph::new(vec!["a".into()], vec![("a".into(), "a".into(), -1.0)]);
    assert!(g.is_err());
    // a degenerate right Gram fails validation
    let mut parts = constructors::from_hilbert_space(2, &linalg::identity(2)).unwrap().to_parts();
    parts.right_gram[1][1] = MultiMatrixAlgebra::scalars().zero();
    let x = HilbertBimodule::new(parts).unwrap();
    assert!(!x.validate(TOL).pass());
}
