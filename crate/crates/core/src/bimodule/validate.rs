use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

use super::HilbertBimodule;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value >= bound }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn into_result(self) -> Result<()> {
        if self.pass() {
            return Ok(());
        }
        let names: Vec<String> = self
            .failures()
            .iter()
            .map(|c| format!("{} ({:.3e} vs {:.1e})", c.name, c.value, c.bound))
            .collect();
        Err(Error::Contract(format!("failed checks: {}", names.join(", "))))
    }
}

fn norm(m: &CMat) -> f64 {
    linalg::max_abs(m)
}

impl HilbertBimodule {
    /// Checks every bimodule axiom. Residuals are entrywise maxima relative to
    /// the size of the data; `tol` bounds them.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let d = self.dim;
        let id = linalg::identity(d);
        let (a, b) = (&self.a, &self.b);
        let act_scale = self
            .left_action
            .iter()
            .chain(&self.right_action)
            .map(norm)
            .fold(1.0, f64::max);

        // phi is a unital *-homomorphism on matrix units.
        let mut hom = 0.0f64;
        for (l, i, j) in a.units() {
            let x = &self.left_action[a.unit_index(l, i, j)];
            for (l2, i2, j2) in a.units() {
                let y = &self.left_action[a.unit_index(l2, i2, j2)];
                let mut r = x * y;
                if l == l2 && j == i2 {
                    r -= &self.left_action[a.unit_index(l, i, j2)];
                }
                hom = hom.max(norm(&r));
            }
        }
        rep.push(Check::at_most("left_action_homomorphism", hom / act_scale, tol));
        let mut unit = -id.clone();
        for (l, &n) in a.blocks().iter().enumerate() {
            for i in 0..n {
                unit += &self.left_action[a.unit_index(l, i, i)];
            }
        }
        rep.push(Check::at_most("left_action_unital", norm(&unit), tol));

        // R(e f) = R(f) R(e).
        let mut anti = 0.0f64;
        for (k, i, j) in b.units() {
            let x = &self.right_action[b.unit_index(k, i, j)];
            for (k2, i2, j2) in b.units() {
                let y = &self.right_action[b.unit_index(k2, i2, j2)];
                let mut r = y * x;
                if k == k2 && j == i2 {
                    r -= &self.right_action[b.unit_index(k, i, j2)];
                }
                anti = anti.max(norm(&r));
            }
        }
        rep.push(Check::at_most("right_action_antihomomorphism", anti / act_scale, tol));
        let mut unit = -id;
        for (k, &n) in b.blocks().iter().enumerate() {
            for i in 0..n {
                unit += &self.right_action[b.unit_index(k, i, i)];
            }
        }
        rep.push(Check::at_most("right_action_unital", norm(&unit), tol));

        let mut comm = 0.0f64;
        for x in &self.left_action {
            for y in &self.right_action {
                comm = comm.max(norm(&(x * y - y * x)));
            }
        }
        rep.push(Check::at_most("actions_commute", comm / act_scale, tol));

        self.validate_right_gram(&mut rep, tol);
        if self.left_gram.is_some() {
            self.validate_left_gram(&mut rep, tol);
        }
        rep
    }

    fn validate_right_gram(&self, rep: &mut ValidationReport, tol: f64) {
        let (a, b, d) = (&self.a, &self.b, self.dim);
        let scale = self.right_gram.iter().map(norm).fold(1e-300, f64::max);
        let herm = self
            .right_gram
            .iter()
            .map(|g| norm(&(g - g.adjoint())))
            .fold(0.0, f64::max);
        rep.push(Check::at_most("right_gram_hermitian", herm / scale, tol));
        let pos = self.right_gram.iter().map(linalg::min_eig).fold(f64::INFINITY, f64::min);
        rep.push(Check::at_least("right_gram_positive", pos / scale, -tol));
        let tg = self.trace_gram();
        let (vals, _) = linalg::heig(&tg);
        let ratio = vals[0] / vals[d - 1].abs().max(1e-300);
        rep.push(Check::at_least("right_gram_definite", ratio, tol.max(1e-12)));

        // (x | y . e) = (x | y) e
        let mut lin = 0.0f64;
        for (k, i, j) in b.units() {
            let r = &self.right_action[b.unit_index(k, i, j)];
            for (k2, &n2) in b.blocks().iter().enumerate() {
                let lhs = &self.right_gram[k2] * linalg::kron(r, &linalg::identity(n2));
                let mut diff = lhs;
                if k2 == k {
                    let mut e = CMat::zeros(n2, n2);
                    e[(i, j)] = linalg::ONE;
                    diff -= &self.right_gram[k] * linalg::kron(&linalg::identity(d), &e);
                }
                lin = lin.max(norm(&diff));
            }
        }
        rep.push(Check::at_most("right_gram_b_linear", lin / scale, tol));

        // (phi(e_ij) x | y) = (x | phi(e_ji) y)
        let mut adj = 0.0f64;
        for (l, i, j) in a.units() {
            let f = &self.left_action[a.unit_index(l, i, j)];
            let ft = &self.left_action[a.unit_index(l, j, i)];
            for (g, &n) in self.right_gram.iter().zip(b.blocks()) {
                let idn = linalg::identity(n);
                let diff = linalg::kron(f, &idn).adjoint() * g - g * linalg::kron(ft, &idn);
                adj = adj.max(norm(&diff));
            }
        }
        rep.push(Check::at_most("left_action_adjointable", adj / scale, tol));
    }

    fn validate_left_gram(&self, rep: &mut ValidationReport, tol: f64) {
        let (a, b, d) = (&self.a, &self.b, self.dim);
        let lg = self.left_gram.as_ref().expect("checked by caller");
        let scale = lg.iter().map(norm).fold(1e-300, f64::max);
        let herm = lg.iter().map(|g| norm(&(g - g.adjoint()))).fold(0.0, f64::max);
        rep.push(Check::at_most("left_gram_hermitian", herm / scale, tol));
        let pos = lg.iter().map(linalg::min_eig).fold(f64::INFINITY, f64::min);
        rep.push(Check::at_least("left_gram_positive", pos / scale, -tol));
        let tg = super::trace_gram(lg, a.blocks(), d);
        let (vals, _) = linalg::heig(&tg);
        let ratio = vals[0] / vals[d - 1].abs().max(1e-300);
        rep.push(Check::at_least("left_gram_definite", ratio, tol.max(1e-12)));

        // _A(phi(e) x | y) = e _A(x | y)
        let mut lin = 0.0f64;
        for (l, i, j) in a.units() {
            let f = &self.left_action[a.unit_index(l, i, j)];
            for (l2, &n2) in a.blocks().iter().enumerate() {
                let mut diff = linalg::kron(f, &linalg::identity(n2)).transpose() * &lg[l2];
                if l2 == l {
                    let mut e = CMat::zeros(n2, n2);
                    e[(i, j)] = linalg::ONE;
                    diff -= linalg::kron(&linalg::identity(d), &e) * &lg[l];
                }
                lin = lin.max(norm(&diff));
            }
        }
        rep.push(Check::at_most("left_gram_a_linear", lin / scale, tol));

        // _A(x . e_ij | y) = _A(x | y . e_ji)
        let mut adj = 0.0f64;
        for (k, i, j) in b.units() {
            let r = &self.right_action[b.unit_index(k, i, j)];
            let rt = &self.right_action[b.unit_index(k, j, i)];
            for (g, &n) in lg.iter().zip(a.blocks()) {
                let idn = linalg::identity(n);
                let diff = linalg::kron(r, &idn).transpose() * g
                    - g * linalg::kron(rt, &idn).map(|z| z.conj());
                adj = adj.max(norm(&diff));
            }
        }
        rep.push(Check::at_most("right_action_left_adjointable", adj / scale, tol));
    }

    /// Validates and returns `self`, or a contract error naming the failures.
    pub fn validated(self, tol: f64) -> Result<Self> {
        self.validate(tol).into_result()?;
        Ok(self)
    }
}
