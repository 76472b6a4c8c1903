use std::path::PathBuf;
use std::time::Instant;

use bimod_core::bimodule::Check;
use bimod_core::conjugation::{self, ConjugateSolution, ConjugateVerification, MinDimOptions};
use bimod_core::constructors;
use bimod_core::index::{self, cp, BasicConstruction, IndexOptions};
use bimod_core::{AlgebraElement, HilbertBimodule};
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{self, Input, InputError, Model, SolutionWire};
use crate::report::{InputDigest, OptionsEcho, Report, SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Index,
    Conjugate,
    Verify,
    Mindim,
    Basic,
    Fibers,
    Morita,
    Tensor,
    Graph,
    Expectation,
    Hilbert,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Index => "index",
            Command::Conjugate => "conjugate",
            Command::Verify => "verify",
            Command::Mindim => "mindim",
            Command::Basic => "basic",
            Command::Fibers => "fibers",
            Command::Morita => "morita",
            Command::Tensor => "tensor",
            Command::Graph => "graph",
            Command::Expectation => "expectation",
            Command::Hilbert => "hilbert",
        }
    }

    fn arity(self) -> usize {
        match self {
            Command::Verify | Command::Tensor => 2,
            _ => 1,
        }
    }

    /// Tolerance used when `--tol` is not given.
    pub fn default_tol(self) -> f64 {
        match self {
            Command::Tensor => 1e-7,
            _ => 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Request {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub budget: Option<usize>,
    pub timing: bool,
}

impl Request {
    pub fn new(command: Command, inputs: Vec<PathBuf>) -> Self {
        Self { command, inputs, tol: None, seed: 0, budget: None, timing: true }
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(self.command.default_tol())
    }
}

/// Exit status: 0 when every check passed, 1 when a computed check failed,
/// 2 when the input could not be used.
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

struct Ctx<'a> {
    req: &'a Request,
    tol: f64,
    inputs: Vec<Input>,
    checks: Vec<Check>,
}

impl Ctx<'_> {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn flag(&mut self, name: &str, ok: bool) {
        self.checks.push(Check::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0));
    }

    /// The bimodule of input `i`, required to satisfy the axioms.
    fn bimodule(&self, i: usize) -> Result<HilbertBimodule, InputError> {
        let x = self.inputs[i].model.bimodule()?;
        gate(&x, self.tol, &self.inputs[i].path)?;
        Ok(x)
    }

    fn bi_hilbertian(&self, i: usize) -> Result<HilbertBimodule, InputError> {
        let x = self.bimodule(i)?;
        if !x.has_left_gram() {
            return Err(InputError(format!(
                "{}: `{}` needs a left inner product (left_gram)",
                self.inputs[i].path,
                self.req.command.name()
            )));
        }
        Ok(x)
    }
}

fn gate(x: &HilbertBimodule, tol: f64, path: &str) -> Result<(), InputError> {
    let rep = x.validate(tol);
    if rep.pass() {
        return Ok(());
    }
    let fails: Vec<String> = rep
        .failures()
        .iter()
        .map(|c| format!("{} = {:.3e} (bound {:.1e})", c.name, c.value, c.bound))
        .collect();
    Err(InputError(format!("{path}: not a valid bimodule: {}", fails.join("; "))))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn coeffs(e: &AlgebraElement) -> Vec<f64> {
    e.central_coefficients().iter().map(|z| z.re).collect()
}

pub fn run(req: &Request) -> Outcome {
    let start = Instant::now();
    let mut ctx = Ctx { req, tol: req.tol(), inputs: Vec::new(), checks: Vec::new() };
    let result = load(&mut ctx).and_then(|_| dispatch(&mut ctx));
    let (result, error) = match result {
        Ok(v) => (v, None),
        Err(e) => (Value::Null, Some(e.0)),
    };
    let pass = error.is_none() && ctx.checks.iter().all(|c| c.pass);
    let exit_code = match (&error, pass) {
        (Some(_), _) => 2,
        (None, true) => 0,
        (None, false) => 1,
    };
    let report = Report {
        schema: SCHEMA,
        command: req.command.name().to_string(),
        inputs: ctx
            .inputs
            .iter()
            .map(|i| InputDigest { path: i.path.clone(), kind: i.model.kind().into(), sha256: i.sha256.clone() })
            .collect(),
        options: OptionsEcho { tol: ctx.tol, seed: req.seed, budget: req.budget },
        result,
        checks: ctx.checks,
        pass,
        error,
        wall_time_ms: req.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    Outcome { report, exit_code }
}

fn load(ctx: &mut Ctx<'_>) -> Result<(), InputError> {
    let want = ctx.req.command.arity();
    if ctx.req.inputs.len() != want {
        return Err(InputError(format!(
            "`{}` takes {want} input file(s), got {}",
            ctx.req.command.name(),
            ctx.req.inputs.len()
        )));
    }
    if !(ctx.tol > 0.0 && ctx.tol.is_finite()) {
        return Err(InputError(format!("--tol must be positive, got {}", ctx.tol)));
    }
    for p in &ctx.req.inputs {
        let i = input::parse_file(p)?;
        ctx.inputs.push(i);
    }
    Ok(())
}

fn expect_kind(ctx: &Ctx<'_>, i: usize, kind: &str) -> Result<(), InputError> {
    let got = ctx.inputs[i].model.kind();
    if got != kind {
        return Err(InputError(format!(
            "{}: `{}` needs a {kind} file, got kind {got:?}",
            ctx.inputs[i].path,
            ctx.req.command.name()
        )));
    }
    Ok(())
}

fn dispatch(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    match ctx.req.command {
        Command::Validate => validate(ctx),
        Command::Index => index_cmd(ctx),
        Command::Conjugate => conjugate(ctx),
        Command::Verify => verify(ctx),
        Command::Mindim => mindim(ctx),
        Command::Basic => basic(ctx),
        Command::Fibers => fibers(ctx),
        Command::Morita => morita(ctx),
        Command::Tensor => tensor(ctx),
        Command::Graph => graph(ctx),
        Command::Expectation => expectation(ctx),
        Command::Hilbert => hilbert(ctx),
    }
}

/// Reports the axioms as checks instead of rejecting the file.
fn validate(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    if let Model::Algebra(alg) = &ctx.inputs[0].model {
        return Ok(json!({
            "blocks": alg.blocks(),
            "dim": alg.dim(),
            "center_dim": alg.num_blocks(),
            "commutative": alg.is_commutative(),
        }));
    }
    let x = ctx.inputs[0].model.bimodule()?;
    let rep = x.validate(ctx.tol);
    ctx.checks.extend(rep.checks);
    Ok(json!({
        "A": x.left_algebra().blocks(),
        "B": x.right_algebra().blocks(),
        "dim": x.dim(),
        "bi_hilbertian": x.has_left_gram(),
    }))
}

fn index_options(ctx: &Ctx<'_>) -> IndexOptions {
    IndexOptions { tol: ctx.tol, seed: ctx.req.seed, ..IndexOptions::default() }
}

fn index_cmd(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bi_hilbertian(0)?;
    let r = index::index_report(&x, &index_options(ctx))?;
    let tol = ctx.tol;
    ctx.check(Check::at_most("frame_agreement", r.frame_agreement, tol * (1.0 + r.r_num)));
    ctx.check(Check::at_most(
        "cp_gap_below_pp_constant",
        r.constants.lambda_prime_lower - r.constants.lambda_prime_hat,
        tol,
    ));
    ctx.check(Check::at_most("lambda_below_r_num", r.constants.lambda_hat - r.constants.lambda_upper, tol));
    ctx.check(Check::at_least("dim_rel", r.dim_rel, 1.0 - 1e-9));
    Ok(to_value(&r))
}

#[derive(Serialize)]
struct SolutionOut {
    kind: &'static str,
    #[serde(flatten)]
    wire: SolutionWire,
}

fn solution_out(sol: &ConjugateSolution, with_y: bool) -> SolutionOut {
    SolutionOut {
        kind: "solution",
        wire: SolutionWire {
            r: input::matrix_to_wire(&sol.r),
            rbar: input::matrix_to_wire(&sol.rbar),
            y: with_y.then(|| input::bimodule_to_wire(&sol.y)),
        },
    }
}

fn verification_checks(ctx: &mut Ctx<'_>, v: &ConjugateVerification) {
    let tol = ctx.tol;
    ctx.check(Check::at_most("residual_1", v.residual_x, tol));
    ctx.check(Check::at_most("residual_2", v.residual_y, tol));
    ctx.check(Check::at_most("intertwining_r", v.intertwining_r, tol));
    ctx.check(Check::at_most("intertwining_rbar", v.intertwining_rbar, tol));
}

fn conjugate(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bi_hilbertian(0)?;
    let sol = conjugation::build_conjugate(&x)?;
    let v = conjugation::verify_conjugate(&x, &sol)?;
    verification_checks(ctx, &v);
    ctx.check(Check::at_least("dim_rel", v.dim_rel, 1.0 - 1e-9));
    let (rr, rbrb) = conjugation::solution_norms(&x, &sol)?;
    let l = index::left_index(&x)?;
    let r = index::right_index(&x)?;
    let tol = ctx.tol;
    ctx.check(Check::at_most("r_star_r_minus_l_ind", rr.distance(&l), tol * (1.0 + l.norm())));
    ctx.check(Check::at_most("rbar_star_rbar_minus_r_ind", rbrb.distance(&r), tol * (1.0 + r.norm())));
    Ok(json!({
        "solution": to_value(&solution_out(&sol, false)),
        "verification": to_value(&v),
        "r_num": r.norm(),
        "l_num": l.norm(),
    }))
}

fn verify(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bimodule(0)?;
    expect_kind(ctx, 1, "solution")?;
    let Model::Solution(s) = &ctx.inputs[1].model else { unreachable!() };
    let y = match &s.y {
        Some(y) => {
            gate(y, ctx.tol, &ctx.inputs[1].path)?;
            y.clone()
        }
        None => x.contragredient()?,
    };
    let sol = ConjugateSolution { y, r: s.r.clone(), rbar: s.rbar.clone() };
    let v = conjugation::verify_conjugate(&x, &sol)?;
    verification_checks(ctx, &v);
    Ok(json!({ "verification": to_value(&v) }))
}

fn min_options(ctx: &Ctx<'_>) -> MinDimOptions {
    MinDimOptions {
        seed: ctx.req.seed,
        budget: ctx.req.budget.unwrap_or(MinDimOptions::default().budget),
        ..MinDimOptions::default()
    }
}

fn mindim(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bi_hilbertian(0)?;
    let m = conjugation::min_dimension(&x, &min_options(ctx))?;
    ctx.check(Check::at_least("dim_hat_at_least_one", m.dim_hat, 1.0 - 1e-6));
    let rise = m.trace.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    ctx.check(Check::at_most("trace_monotone", rise, 0.0));
    Ok(to_value(&m))
}

fn basic(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bi_hilbertian(0)?;
    let consts = index::best_constants(&x, &index_options(ctx))?;
    let bc = BasicConstruction::new(&x)?;
    let c = bc.checks(consts.lambda_prime_lower, 50, ctx.req.seed)?;
    let tol = ctx.tol;
    ctx.check(Check::at_most("idempotent", c.idempotent, tol));
    ctx.check(Check::at_most("bimodular", c.bimodular, tol));
    ctx.check(Check::at_least("completely_positive", c.cp_min_eig, -tol));
    ctx.check(Check::at_least("pimsner_popa", c.pp_min_eig, -tol));
    Ok(json!({
        "checks": to_value(&c),
        "lambda_prime": consts.lambda_prime_lower,
        "r_ind": coeffs(&bc.r_ind),
        "z_prime": coeffs(&bc.z_prime),
        "p": coeffs(&bc.p),
    }))
}

fn fibers(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bi_hilbertian(0)?;
    let r = index::index_report(&x, &index_options(ctx))?;
    let f = index::fiber_decomposition(&x, &r.r_coeffs, r.constants.lambda_prime_hat);
    for fib in &f.fibers {
        ctx.check(Check::at_most(format!("fiber_{}_bound", fib.a_block), fib.dim as f64, fib.bound as f64));
    }
    Ok(to_value(&f))
}

fn morita(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bimodule(0)?;
    let opts = min_options(ctx);
    let m = conjugation::morita_check(&x, Some(&opts))?;
    ctx.flag("conditions_agree", m.consistent);
    Ok(to_value(&m))
}

fn tensor(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    let x = ctx.bi_hilbertian(0)?;
    let y = ctx.bi_hilbertian(1)?;
    let z = x.tensor(&y)?;
    let rep = z.module.validate(ctx.tol);
    ctx.flag("product_validates", rep.pass());
    let (sx, sy) = (conjugation::build_conjugate(&x)?, conjugation::build_conjugate(&y)?);
    let (vx, vy) = (conjugation::verify_conjugate(&x, &sx)?, conjugation::verify_conjugate(&y, &sy)?);
    let comp = conjugation::tensor_conjugate(&x, &sx, &y, &sy)?;
    let v = conjugation::verify_conjugate(&comp.z.module, &comp.solution)?;
    verification_checks(ctx, &v);
    ctx.check(Check::at_most("r_norm_bound", v.r_norm - vx.r_norm * vy.r_norm, 1e-9));
    ctx.check(Check::at_most("rbar_norm_bound", v.rbar_norm - vx.rbar_norm * vy.rbar_norm, 1e-9));
    let rz = index::right_index(&z.module)?;
    let lz = index::left_index(&z.module)?;
    let frame = x.tight_frame()?;
    let want = index::extend_f(&x, &frame, &x.right_act(&index::right_index(&y)?)?)?;
    let tol = ctx.tol;
    ctx.check(Check::at_most("r_ind_composition", rz.distance(&want), tol * (1.0 + want.norm())));
    Ok(json!({
        "dims": [x.dim(), y.dim(), z.module.dim()],
        "r_ind": coeffs(&rz),
        "l_ind": coeffs(&lz),
        "r_num": rz.norm(),
        "l_num": lz.norm(),
        "verification": to_value(&v),
    }))
}

fn graph(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    expect_kind(ctx, 0, "graph")?;
    let Model::Graph(g) = &ctx.inputs[0].model else { unreachable!() };
    let g = g.clone();
    let x = g.bimodule()?;
    let cf = g.closed_form();
    let r = coeffs(&index::right_index(&x)?);
    let l = coeffs(&index::left_index(&x)?);
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0f64, f64::max);
    let c1 = r.iter().copied().fold(0.0f64, f64::max);
    let c2 = l.iter().copied().fold(0.0f64, f64::max);
    let tol = ctx.tol;
    ctx.check(Check::at_most("right_index_closed_form", gap(&r, &cf.right), tol));
    ctx.check(Check::at_most("left_index_closed_form", gap(&l, &cf.left), tol));
    ctx.check(Check::at_most("c1", (c1 - cf.c1).abs(), tol));
    ctx.check(Check::at_most("c2", (c2 - cf.c2).abs(), tol));
    Ok(json!({
        "vertices": g.vertices(),
        "right_closed_form": cf.right,
        "left_closed_form": cf.left,
        "right_engine": r,
        "left_engine": l,
        "c1": cf.c1,
        "c2": cf.c2,
    }))
}

fn expectation(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    expect_kind(ctx, 0, "expectation")?;
    let Model::Expectation(e, _) = &ctx.inputs[0].model else { unreachable!() };
    let e = e.clone();
    let eb = constructors::from_expectation(&e)?;
    for (name, m) in [("x", &eb.x), ("y", &eb.y), ("z", &eb.z)] {
        gate(m, ctx.tol, name)?;
    }
    let ind = index::right_index(&eb.x)?;
    let c = coeffs(&ind);
    let at_c = conjugation::expectation_cp_min_eig(&e, &c)?;
    let shrunk: Vec<f64> = c.iter().map(|v| v * 0.999).collect();
    let at_shrunk = conjugation::expectation_cp_min_eig(&e, &shrunk)?;
    let b = &e.inclusion.b;
    let gap = cp::cp_gap(b, |v| e.inclusion.embed(&e.apply(v)), 1e-12);
    let tol = ctx.tol;
    ctx.check(Check::at_least("cp_at_index", at_c, -tol));
    ctx.check(Check::at_most("cp_fails_below_index", at_shrunk, -tol));
    ctx.check(Check::at_most("cp_gap_is_inverse_index_norm", (gap - 1.0 / ind.norm()).abs(), 1e-6));
    let idx = |m: &HilbertBimodule| -> Result<Value, InputError> {
        Ok(json!({
            "r_ind": coeffs(&index::right_index(m)?),
            "l_ind": coeffs(&index::left_index(m)?),
        }))
    };
    Ok(json!({
        "index_e": c,
        "index_e_norm": ind.norm(),
        "cp_gap": gap,
        "cp_min_eig_at_index": at_c,
        "cp_min_eig_below_index": at_shrunk,
        "x": idx(&eb.x)?,
        "y": idx(&eb.y)?,
        "z": idx(&eb.z)?,
    }))
}

fn hilbert(ctx: &mut Ctx<'_>) -> Result<Value, InputError> {
    expect_kind(ctx, 0, "hilbert")?;
    let x = ctx.bi_hilbertian(0)?;
    let Model::Hilbert(_, t) = &ctx.inputs[0].model else { unreachable!() };
    let tr = t.trace().re;
    let tr_inv = t.clone().try_inverse().ok_or_else(|| InputError("T is not invertible".into()))?.trace().re;
    let r = index::right_index(&x)?.norm();
    let l = index::left_index(&x)?.norm();
    let tol = ctx.tol;
    ctx.check(Check::at_most("r_ind_is_trace", (r - tr).abs() / tr, tol));
    ctx.check(Check::at_most("l_ind_is_inverse_trace", (l - tr_inv).abs() / tr_inv, tol));
    Ok(json!({
        "r_num": r,
        "l_num": l,
        "trace_t": tr,
        "trace_t_inverse": tr_inv,
        "dim_rel": (r * l).sqrt(),
    }))
}
