//! Specification files. Every file is one JSON object whose `"kind"` field
//! selects the model: `algebra`, `bimodule`, `graph`, `expectation`,
//! `hilbert` or `solution`.

use std::fmt;
use std::path::Path;

use bimod_core::constructors::{self, ConditionalExpectation, Graph, Inclusion};
use bimod_core::linalg::{CMat, C64};
use bimod_core::{AlgebraElement, BimoduleParts, HilbertBimodule, MultiMatrixAlgebra};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// An input that could not be read, parsed or validated.
#[derive(Debug, Clone)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

impl From<bimod_core::Error> for InputError {
    fn from(e: bimod_core::Error) -> Self {
        InputError(e.to_string())
    }
}

/// A matrix entry: a real number or an `[re, im]` pair.
#[derive(Deserialize, Serialize, Clone, Copy, Debug)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Scalar> for C64 {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Real(r) => C64::new(r, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

pub type MatrixWire = Vec<Vec<Scalar>>;

#[derive(Deserialize, Serialize, Clone, Debug)]
pub struct AlgebraWire {
    pub blocks: Vec<usize>,
}

#[derive(Deserialize, Serialize, Clone, Debug)]
pub struct ElementWire {
    pub blocks: Vec<MatrixWire>,
}

#[derive(Deserialize, Serialize, Clone, Debug)]
pub struct ImagesWire {
    pub images: Vec<MatrixWire>,
}

#[derive(Deserialize, Serialize, Clone, Debug)]
pub struct BimoduleWire {
    #[serde(rename = "A")]
    pub a: AlgebraWire,
    #[serde(rename = "B")]
    pub b: AlgebraWire,
    pub dim: usize,
    pub right_gram: Vec<Vec<ElementWire>>,
    pub left_action: ImagesWire,
    pub right_action: ImagesWire,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_gram: Option<Vec<Vec<ElementWire>>>,
}

#[derive(Deserialize, Clone, Debug)]
pub struct InclusionWire {
    pub blocks: Vec<usize>,
    pub multiplicity: Vec<Vec<usize>>,
}

#[derive(Deserialize, Clone, Debug)]
pub struct GraphWire {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String, f64)>,
}

#[derive(Deserialize, Clone, Debug)]
pub struct ExpectationWire {
    #[serde(rename = "B")]
    pub b: AlgebraWire,
    #[serde(rename = "A_blocks")]
    pub a_blocks: InclusionWire,
    #[serde(rename = "E_weights")]
    pub e_weights: Vec<Vec<f64>>,
    /// Which of the three bimodules generic commands act on.
    #[serde(default)]
    pub module: Option<Which>,
}

#[derive(Deserialize, Clone, Copy, Debug, Default, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    #[default]
    X,
    Y,
    Z,
}

#[derive(Deserialize, Clone, Debug)]
pub struct HilbertWire {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: MatrixWire,
}

#[derive(Deserialize, Serialize, Clone, Debug)]
pub struct SolutionWire {
    #[serde(rename = "R")]
    pub r: MatrixWire,
    #[serde(rename = "Rbar")]
    pub rbar: MatrixWire,
    #[serde(rename = "Y", default, skip_serializing_if = "Option::is_none")]
    pub y: Option<BimoduleWire>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Wire {
    Algebra(AlgebraWire),
    Bimodule(BimoduleWire),
    Graph(GraphWire),
    Expectation(ExpectationWire),
    Hilbert(HilbertWire),
    Solution(SolutionWire),
}

/// A solution read from a file, in the algebraic tensor coordinates.
#[derive(Clone, Debug)]
pub struct SolutionInput {
    pub r: CMat,
    pub rbar: CMat,
    pub y: Option<HilbertBimodule>,
}

#[derive(Clone, Debug)]
pub enum Model {
    Algebra(MultiMatrixAlgebra),
    Bimodule(HilbertBimodule),
    Graph(Graph),
    Expectation(ConditionalExpectation, Which),
    Hilbert(usize, CMat),
    Solution(SolutionInput),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Algebra(_) => "algebra",
            Model::Bimodule(_) => "bimodule",
            Model::Graph(_) => "graph",
            Model::Expectation(..) => "expectation",
            Model::Hilbert(..) => "hilbert",
            Model::Solution(_) => "solution",
        }
    }

    /// The bimodule a generic command acts on.
    pub fn bimodule(&self) -> Result<HilbertBimodule, InputError> {
        Ok(match self {
            Model::Bimodule(x) => x.clone(),
            Model::Graph(g) => g.bimodule()?,
            Model::Hilbert(n, t) => constructors::from_hilbert_space(*n, t)?,
            Model::Expectation(e, which) => {
                let eb = constructors::from_expectation(e)?;
                match which {
                    Which::X => eb.x,
                    Which::Y => eb.y,
                    Which::Z => eb.z,
                }
            }
            Model::Algebra(_) | Model::Solution(_) => {
                return Err(InputError(format!("a {} file does not describe a bimodule", self.kind())))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct Input {
    pub path: String,
    pub sha256: String,
    pub model: Model,
}

pub fn matrix(w: &MatrixWire, what: &str) -> Result<CMat, InputError> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if let Some(i) = w.iter().position(|r| r.len() != cols) {
        return Err(InputError(format!("{what}: row {i} has {} entries, expected {cols}", w[i].len())));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| w[i][j].into()))
}

fn algebra(w: &AlgebraWire, what: &str) -> Result<MultiMatrixAlgebra, InputError> {
    MultiMatrixAlgebra::new(w.blocks.clone()).map_err(|e| InputError(format!("{what}: {e}")))
}

fn element(w: &ElementWire, alg: &MultiMatrixAlgebra, what: &str) -> Result<AlgebraElement, InputError> {
    if w.blocks.len() != alg.num_blocks() {
        return Err(InputError(format!(
            "{what}: {} blocks, the algebra has {}",
            w.blocks.len(),
            alg.num_blocks()
        )));
    }
    let blocks = w
        .blocks
        .iter()
        .enumerate()
        .map(|(k, b)| matrix(b, &format!("{what} block {k}")))
        .collect::<Result<Vec<_>, _>>()?;
    let e = AlgebraElement::new(blocks).map_err(|e| InputError(format!("{what}: {e}")))?;
    if !alg.contains(&e) {
        return Err(InputError(format!("{what}: block shapes do not match {alg}")));
    }
    Ok(e)
}

fn grams(
    rows: &[Vec<ElementWire>],
    alg: &MultiMatrixAlgebra,
    dim: usize,
    what: &str,
) -> Result<Vec<Vec<AlgebraElement>>, InputError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(InputError(format!("{what} must be a {dim}x{dim} array of elements")));
    }
    rows.iter()
        .enumerate()
        .map(|(p, r)| r.iter().enumerate().map(|(q, e)| element(e, alg, &format!("{what}[{p}][{q}]"))).collect())
        .collect()
}

pub fn bimodule_from_wire(w: &BimoduleWire) -> Result<HilbertBimodule, InputError> {
    let a = algebra(&w.a, "A")?;
    let b = algebra(&w.b, "B")?;
    let images = |im: &ImagesWire, what: &str| -> Result<Vec<CMat>, InputError> {
        im.images.iter().enumerate().map(|(i, m)| matrix(m, &format!("{what} image {i}"))).collect()
    };
    let parts = BimoduleParts {
        right_gram: grams(&w.right_gram, &b, w.dim, "right_gram")?,
        left_gram: w.left_gram.as_ref().map(|l| grams(l, &a, w.dim, "left_gram")).transpose()?,
        left_action: images(&w.left_action, "left_action")?,
        right_action: images(&w.right_action, "right_action")?,
        a,
        b,
        dim: w.dim,
    };
    Ok(HilbertBimodule::new(parts)?)
}

fn element_to_wire(e: &AlgebraElement) -> ElementWire {
    ElementWire { blocks: e.blocks().iter().map(matrix_to_wire).collect() }
}

pub fn matrix_to_wire(m: &CMat) -> MatrixWire {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Scalar::Complex([m[(i, j)].re, m[(i, j)].im])).collect())
        .collect()
}

pub fn bimodule_to_wire(x: &HilbertBimodule) -> BimoduleWire {
    let p = x.to_parts();
    let rows = |g: &[Vec<AlgebraElement>]| g.iter().map(|r| r.iter().map(element_to_wire).collect()).collect();
    BimoduleWire {
        a: AlgebraWire { blocks: p.a.blocks().to_vec() },
        b: AlgebraWire { blocks: p.b.blocks().to_vec() },
        dim: p.dim,
        right_gram: rows(&p.right_gram),
        left_action: ImagesWire { images: p.left_action.iter().map(matrix_to_wire).collect() },
        right_action: ImagesWire { images: p.right_action.iter().map(matrix_to_wire).collect() },
        left_gram: p.left_gram.as_deref().map(rows),
    }
}

fn located(text: &str, path: &str, e: &serde_json::Error) -> InputError {
    if e.line() == 0 {
        return InputError(format!("{path}: {e}"));
    }
    let src = text.lines().nth(e.line() - 1).unwrap_or("").trim();
    let src: String = src.chars().take(80).collect();
    InputError(format!("{path}:{}:{}: {e}\n  | {src}", e.line(), e.column()))
}

fn model(wire: Wire) -> Result<Model, InputError> {
    Ok(match wire {
        Wire::Algebra(a) => Model::Algebra(algebra(&a, "algebra")?),
        Wire::Bimodule(b) => Model::Bimodule(bimodule_from_wire(&b)?),
        Wire::Graph(g) => Model::Graph(Graph::new(g.vertices, g.edges)?),
        Wire::Expectation(e) => {
            let b = algebra(&e.b, "B")?;
            let a = MultiMatrixAlgebra::new(e.a_blocks.blocks.clone())
                .map_err(|err| InputError(format!("A_blocks: {err}")))?;
            let inc = Inclusion::new(a, b, e.a_blocks.multiplicity)?;
            Model::Expectation(ConditionalExpectation::new(inc, e.e_weights)?, e.module.unwrap_or_default())
        }
        Wire::Hilbert(h) => {
            let t = matrix(&h.t, "T")?;
            if t.shape() != (h.n, h.n) {
                return Err(InputError(format!("T must be {0}x{0}", h.n)));
            }
            Model::Hilbert(h.n, t)
        }
        Wire::Solution(s) => Model::Solution(SolutionInput {
            r: matrix(&s.r, "R")?,
            rbar: matrix(&s.rbar, "Rbar")?,
            y: s.y.as_ref().map(bimodule_from_wire).transpose()?,
        }),
    })
}

/// Parses a specification from text. `path` is used in messages only.
pub fn parse_str(text: &str, path: &str) -> Result<Input, InputError> {
    let wire: Wire = serde_json::from_str(text).map_err(|e| located(text, path, &e))?;
    let sha256 = format!("{:x}", Sha256::digest(text.as_bytes()));
    Ok(Input { path: path.to_string(), sha256, model: model(wire).map_err(|e| InputError(format!("{path}: {e}")))? })
}

pub fn parse_file(path: &Path) -> Result<Input, InputError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{shown}: {e}")))?;
    parse_str(&text, &shown)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_inferred() {
        let h = parse_str(r#"{"kind":"hilbert","n":2,"T":[[1,0],[0,2]]}"#, "h").unwrap();
        assert_eq!(h.model.kind(), "hilbert");
        assert_eq!(h.model.bimodule().unwrap().dim(), 2);
        let a = parse_str(r#"{"kind":"algebra","blocks":[1,2]}"#, "a").unwrap();
        assert!(a.model.bimodule().is_err());
        assert!(parse_str(r#"{"kind":"tree"}"#, "t").is_err());
        assert!(parse_str(r#"{"n":2}"#, "t").is_err());
    }

    #[test]
    fn entries_may_be_real_or_complex() {
        let s = parse_str(r#"{"kind":"solution","R":[[1,[0,2]]],"Rbar":[[[0.5,0]],[3]]}"#, "s").unwrap();
        let Model::Solution(s) = s.model else { panic!() };
        assert_eq!(s.r[(0, 1)], C64::new(0.0, 2.0));
        assert_eq!(s.rbar.shape(), (2, 1));
        assert!(parse_str(r#"{"kind":"solution","R":[[1,2],[3]],"Rbar":[[1]]}"#, "s").is_err());
    }

    #[test]
    fn bimodules_round_trip_through_the_wire_format() {
        let x = constructors::imprimitivity(3).unwrap();
        let mut v = serde_json::to_value(bimodule_to_wire(&x)).unwrap();
        v["kind"] = "bimodule".into();
        let back = parse_str(&v.to_string(), "x").unwrap().model.bimodule().unwrap();
        assert!(back.validate(1e-12).pass());
        assert_eq!(back.left_gram_blocks().unwrap(), x.left_gram_blocks().unwrap());
    }

    #[test]
    fn shape_errors_name_the_entry() {
        let bad = r#"{"kind":"bimodule","A":{"blocks":[1]},"B":{"blocks":[1]},"dim":1,
            "right_gram":[[{"blocks":[[[1,0]]]}]],
            "left_action":{"images":[[[1]]]},"right_action":{"images":[[[1]]]}}"#;
        let e = parse_str(bad, "b").unwrap_err();
        assert!(e.0.contains("right_gram[0][0]"), "{e}");
    }
}
