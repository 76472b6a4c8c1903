//! JSON encodings shared by the library and the command-line tool.

use serde::ser::{SerializeSeq, Serializer};

use crate::linalg::CMat;
use crate::multimatrix::AlgebraElement;

/// Matrix as a list of rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn ser_element<S: Serializer>(e: &AlgebraElement, s: S) -> Result<S::Ok, S::Error> {
    #[derive(serde::Serialize)]
    struct Wire {
        blocks: Vec<Vec<Vec<[f64; 2]>>>,
    }
    serde::Serialize::serialize(
        &Wire { blocks: e.blocks().iter().map(matrix_to_json).collect() },
        s,
    )
}

pub fn ser_matrix<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
    let rows = matrix_to_json(m);
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in &rows {
        seq.serialize_element(r)?;
    }
    seq.end()
}
