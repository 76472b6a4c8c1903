//! Seeded random instances for tests, benchmarks and batch checks.

use rand::Rng;

use crate::bimodule::{pull_left, pull_right, random_unitary, HilbertBimodule};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::multimatrix::{random_matrix, MultiMatrixAlgebra};

/// Block data of a bimodule in standard form:
/// `X = sum_{l,k} C^{a_l} (x) C^{m_lk} (x) C^{b_k}`.
#[derive(Clone, Debug)]
pub struct Shape {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub multiplicity: Vec<Vec<usize>>,
}

impl Shape {
    pub fn dim(&self) -> usize {
        let mut d = 0;
        for (l, &al) in self.a.iter().enumerate() {
            for (k, &bk) in self.b.iter().enumerate() {
                d += al * self.multiplicity[l][k] * bk;
            }
        }
        d
    }

    /// Random shape with every block of `A` and `B` used, and total
    /// dimension at most `max_dim`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_blocks: usize, max_size: usize, max_mult: usize, max_dim: usize) -> Self {
        loop {
            let na = rng.random_range(1..=max_blocks);
            let a: Vec<usize> = (0..na).map(|_| rng.random_range(1..=max_size)).collect();
            if let Some(s) = Self::try_with_left(rng, a, max_blocks, max_size, max_mult, max_dim) {
                return s;
            }
        }
    }

    /// Random shape over a fixed left algebra `a`.
    pub fn random_with_left<R: Rng + ?Sized>(
        rng: &mut R,
        a: &[usize],
        max_blocks: usize,
        max_size: usize,
        max_mult: usize,
        max_dim: usize,
    ) -> Self {
        loop {
            if let Some(s) = Self::try_with_left(rng, a.to_vec(), max_blocks, max_size, max_mult, max_dim) {
                return s;
            }
        }
    }

    fn try_with_left<R: Rng + ?Sized>(
        rng: &mut R,
        a: Vec<usize>,
        max_blocks: usize,
        max_size: usize,
        max_mult: usize,
        max_dim: usize,
    ) -> Option<Self> {
        let na = a.len();
        let nb = rng.random_range(1..=max_blocks);
        let b: Vec<usize> = (0..nb).map(|_| rng.random_range(1..=max_size)).collect();
        let mut m = vec![vec![0; nb]; na];
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                if rng.random_bool(0.5) {
                    *v = rng.random_range(1..=max_mult);
                }
            }
        }
        for l in 0..na {
            if m[l].iter().all(|&v| v == 0) {
                m[l][rng.random_range(0..nb)] = 1;
            }
        }
        for k in 0..nb {
            if (0..na).all(|l| m[l][k] == 0) {
                m[rng.random_range(0..na)][k] = 1;
            }
        }
        let s = Shape { a, b, multiplicity: m };
        (s.dim() <= max_dim).then_some(s)
    }
}

fn random_pd<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> CMat {
    let u = random_unitary(rng, n);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        linalg::c((rng.random_range(-spread..=spread)).exp())
    }));
    &u * d * u.adjoint()
}

/// A bi-Hilbertian bimodule of the given shape. Both inner products are
/// twisted by random positive elements of the relative commutant, and the
/// coordinates by a random invertible matrix unless `standard` is set.
pub fn random_bimodule<R: Rng + ?Sized>(rng: &mut R, shape: &Shape, standard: bool) -> Result<HilbertBimodule> {
    let a_alg = MultiMatrixAlgebra::new(shape.a.clone())?;
    let b_alg = MultiMatrixAlgebra::new(shape.b.clone())?;
    // coordinate list (l, k, i, mu, j)
    let mut coords = Vec::new();
    let mut twists = Vec::new();
    for (l, &al) in shape.a.iter().enumerate() {
        for (k, &bk) in shape.b.iter().enumerate() {
            let m = shape.multiplicity[l][k];
            if m == 0 {
                continue;
            }
            let (p, q) = if standard {
                (linalg::identity(m), linalg::identity(m))
            } else {
                (random_pd(rng, m, 0.7), random_pd(rng, m, 0.7))
            };
            twists.push(((l, k), p, q));
            for i in 0..al {
                for mu in 0..m {
                    for j in 0..bk {
                        coords.push((l, k, i, mu, j));
                    }
                }
            }
        }
    }
    let d = coords.len();
    let twist = |l: usize, k: usize| &twists.iter().find(|t| t.0 == (l, k)).expect("present").1;
    let twist_left = |l: usize, k: usize| &twists.iter().find(|t| t.0 == (l, k)).expect("present").2;

    let mut left = Vec::with_capacity(a_alg.dim());
    for (l, i, i2) in a_alg.units() {
        let mut m = CMat::zeros(d, d);
        for (src, c) in coords.iter().enumerate() {
            if c.0 == l && c.2 == i2 {
                let dst = coords.iter().position(|t| *t == (l, c.1, i, c.3, c.4)).expect("coordinate");
                m[(dst, src)] = linalg::ONE;
            }
        }
        left.push(m);
    }
    let mut right = Vec::with_capacity(b_alg.dim());
    for (k, j, j2) in b_alg.units() {
        let mut m = CMat::zeros(d, d);
        for (src, c) in coords.iter().enumerate() {
            if c.1 == k && c.4 == j {
                let dst = coords.iter().position(|t| *t == (c.0, k, c.2, c.3, j2)).expect("coordinate");
                m[(dst, src)] = linalg::ONE;
            }
        }
        right.push(m);
    }
    let mut rg: Vec<CMat> = shape.b.iter().map(|&n| CMat::zeros(d * n, d * n)).collect();
    let mut lg: Vec<CMat> = shape.a.iter().map(|&n| CMat::zeros(d * n, d * n)).collect();
    for (p, cp) in coords.iter().enumerate() {
        for (q, cq) in coords.iter().enumerate() {
            if cp.0 != cq.0 || cp.1 != cq.1 {
                continue;
            }
            let (l, k) = (cp.0, cp.1);
            if cp.2 == cq.2 {
                let n = shape.b[k];
                rg[k][(p * n + cp.4, q * n + cq.4)] = twist(l, k)[(cp.3, cq.3)];
            }
            if cp.4 == cq.4 {
                let n = shape.a[l];
                lg[l][(p * n + cp.2, q * n + cq.2)] = twist_left(l, k)[(cq.3, cp.3)];
            }
        }
    }
    let x = HilbertBimodule::from_blocks(a_alg, b_alg, d, left, right, rg, Some(lg))?;
    if standard {
        return Ok(x);
    }
    let s = random_matrix(rng, d, d) * linalg::c(0.3) + linalg::identity(d);
    change_coordinates(&x, &s)
}

/// The same bimodule in coordinates `x_old = S x_new`.
pub fn change_coordinates(x: &HilbertBimodule, s: &CMat) -> Result<HilbertBimodule> {
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| crate::error::Error::Input("coordinate change is singular".into()))?;
    let conj = |ms: &[CMat]| ms.iter().map(|m| &s_inv * m * s).collect::<Vec<_>>();
    let rg = x
        .right_gram_blocks()
        .iter()
        .zip(x.right_algebra().blocks())
        .map(|(g, &n)| pull_right(g, n, s))
        .collect();
    let lg = x.left_gram_blocks().ok().map(|l| {
        l.iter()
            .zip(x.left_algebra().blocks())
            .map(|(g, &n)| pull_left(g, n, s))
            .collect()
    });
    HilbertBimodule::from_blocks(
        x.left_algebra().clone(),
        x.right_algebra().clone(),
        x.dim(),
        conj(x.left_action_units()),
        conj(x.right_action_units()),
        rg,
        lg,
    )
}

/// Random positive definite `n x n` matrix with log-eigenvalues uniform in
/// `[-spread, spread]`.
pub fn random_positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> CMat {
    random_pd(rng, n, spread)
}

/// A fixed, seeded collection of bi-Hilbertian bimodules covering every
/// constructor: random shapes, a Hilbert space, an imprimitivity bimodule,
/// a weighted graph and the three bimodules of a conditional expectation.
pub fn zoo(seed: u64) -> Vec<(String, HilbertBimodule)> {
    use crate::constructors::{self, ConditionalExpectation, Graph, Inclusion};
    use rand::SeedableRng;

    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..6 {
        let shape = Shape::random(&mut r, 3, 2, 2, 14);
        out.push((format!("random{i}"), random_bimodule(&mut r, &shape, false).expect("valid shape")));
    }
    let t = random_positive_definite(&mut r, 3, 0.8);
    out.push(("hilbert".into(), constructors::from_hilbert_space(3, &t).expect("positive T")));
    out.push(("imprimitivity".into(), constructors::imprimitivity(3).expect("n > 0")));
    let g = Graph::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![
            ("a".into(), "b".into(), 0.5),
            ("b".into(), "c".into(), 2.0),
            ("c".into(), "a".into(), 1.5),
            ("a".into(), "a".into(), 3.0),
        ],
    )
    .expect("valid graph");
    out.push(("graph".into(), g.bimodule().expect("valid graph")));
    let b = MultiMatrixAlgebra::new(vec![2]).expect("nonempty");
    let a = MultiMatrixAlgebra::diagonal(2).expect("nonempty");
    let inc = Inclusion::new(a, b, vec![vec![1], vec![1]]).expect("unital");
    let e = ConditionalExpectation::new(inc, vec![vec![1.0], vec![1.0]]).expect("trace weights");
    let eb = constructors::from_expectation(&e).expect("valid expectation");
    out.push(("expectation_x".into(), eb.x));
    out.push(("expectation_y".into(), eb.y));
    out.push(("expectation_z".into(), eb.z));
    out
}
