//! JSON documents. Matrices are arrays of rows, each entry a `[re, im]` pair.

use std::path::Path;

use cpkit::{CMatrix, CVector, CpMap, PartialCpMap, Tolerance, C64};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub type MatrixRepr = Vec<Vec<[f64; 2]>>;
pub type VectorRepr = Vec<[f64; 2]>;

/// Input failure, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MapDocument {
    pub d_in: usize,
    pub d_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixRepr>,
}

/// `β` on matrix units: `blocks[i][j] = β(E_ij)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PartialDocument {
    pub d_in: usize,
    pub d_out: usize,
    pub blocks: Vec<Vec<MatrixRepr>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    pub matrix: MatrixRepr,
}

pub fn encode_matrix(m: &CMatrix) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn encode_vector(v: &CVector) -> VectorRepr {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_matrix(rows: &MatrixRepr) -> Result<CMatrix, InputError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(InputError("ragged matrix rows".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(InputError("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_fn(r, c, |i, j| {
        let [re, im] = rows[i][j];
        C64::new(re, im)
    }))
}

impl MapDocument {
    pub fn from_map(phi: &CpMap) -> Self {
        MapDocument {
            d_in: phi.d_in(),
            d_out: phi.d_out(),
            kraus: phi.kraus().map(|ks| ks.iter().map(encode_matrix).collect()),
            choi: Some(encode_matrix(phi.choi())),
        }
    }

    pub fn to_map(&self, tol: &Tolerance) -> Result<CpMap, InputError> {
        let kraus = self
            .kraus
            .as_ref()
            .map(|ks| ks.iter().map(decode_matrix).collect::<Result<Vec<_>, _>>())
            .transpose()?;
        let choi = self.choi.as_ref().map(decode_matrix).transpose()?;
        if self.d_in == 0 || self.d_out == 0 {
            return Err(InputError("dimensions must be positive".into()));
        }
        Ok(CpMap::from_parts(self.d_in, self.d_out, kraus, choi, tol)?)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }
}

impl PartialDocument {
    pub fn to_partial(&self, r: &CMatrix, tol: &Tolerance) -> Result<PartialCpMap, InputError> {
        if self.blocks.len() != self.d_in || self.blocks.iter().any(|row| row.len() != self.d_in) {
            return Err(InputError(format!("expected {0}x{0} blocks", self.d_in)));
        }
        let blocks = self
            .blocks
            .iter()
            .flatten()
            .map(decode_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PartialCpMap::new(
            self.d_in,
            self.d_out,
            r.clone(),
            blocks,
            tol,
        )?)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

pub fn read_map(path: &Path, tol: &Tolerance) -> Result<CpMap, InputError> {
    read_json::<MapDocument>(path)?.to_map(tol)
}

pub fn read_operator(path: &Path) -> Result<CMatrix, InputError> {
    decode_matrix(&read_json::<OperatorDocument>(path)?.matrix)
}

pub fn tolerance_value(tol: &Tolerance) -> Value {
    json!({ "eps_rank": tol.eps_rank, "eps_psd": tol.eps_psd, "eps_eq": tol.eps_eq })
}
