//! Model container: `b"TRMV"`, version `u16`, manifest length `u64`, a JSON
//! manifest, then one tensor block per coefficient core followed by its
//! factor matrices (input bases first), in input order.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use trmv_core::regression::FitDiagnostics;
use trmv_core::{CoefficientTensor, TrmvModel};

use crate::error::{Error, Result};
use crate::io::{matrix_to_tensor, read_tensor, tensor_to_matrix, write_file, write_tensor};

pub const MODEL_MAGIC: &[u8; 4] = b"TRMV";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub software_version: String,
    pub method: String,
    pub input_count: usize,
    pub input_shapes: Vec<Vec<usize>>,
    pub output_shape: Vec<usize>,
    /// Core shape of each coefficient.
    pub ranks: Vec<Vec<usize>>,
    pub response_rank: Vec<usize>,
    pub lambda: f64,
    pub diagnostics: FitDiagnostics,
}

impl ModelManifest {
    pub fn describe(model: &TrmvModel, method: &str) -> Self {
        Self {
            software_version: env!("CARGO_PKG_VERSION").into(),
            method: method.into(),
            input_count: model.input_count(),
            input_shapes: model.coefficients.iter().map(|c| c.input_shape.clone()).collect(),
            output_shape: model.output_shape().to_vec(),
            ranks: model.coefficients.iter().map(|c| c.tucker.ranks()).collect(),
            response_rank: model.response_rank.clone(),
            lambda: model.lambda,
            diagnostics: model.diagnostics.clone(),
        }
    }
}

pub fn write_model<W: Write>(w: &mut W, model: &TrmvModel, method: &str) -> Result<()> {
    let manifest = serde_json::to_vec(&ModelManifest::describe(model, method))?;
    let io = |e| Error::format("model", format!("write failed: {e}"));
    w.write_all(MODEL_MAGIC).map_err(io)?;
    w.write_all(&MODEL_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(manifest.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&manifest).map_err(io)?;
    for c in &model.coefficients {
        write_tensor(w, &c.tucker.core).map_err(io)?;
        for f in &c.tucker.factors {
            write_tensor(w, &matrix_to_tensor(f)?).map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<(TrmvModel, ModelManifest)> {
    let mut head = [0u8; 14];
    r.read_exact(&mut head)
        .map_err(|e| Error::format("model", format!("truncated header: {e}")))?;
    if &head[..4] != MODEL_MAGIC {
        return Err(Error::format("model", "bad magic"));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != MODEL_VERSION {
        return Err(Error::format("model", format!("unsupported version {version}")));
    }
    let len = u64::from_le_bytes(head[6..14].try_into().expect("8 bytes"));
    let mut text = Vec::new();
    r.take(len).read_to_end(&mut text).map_err(|e| Error::format("model", e.to_string()))?;
    if text.len() as u64 != len {
        return Err(Error::format("model", "truncated manifest"));
    }
    let m: ModelManifest = serde_json::from_slice(&text)?;
    if m.ranks.len() != m.input_count || m.input_shapes.len() != m.input_count || m.input_count == 0 {
        return Err(Error::format("model", "manifest input count disagrees with its shapes"));
    }

    let mut coefficients = Vec::with_capacity(m.input_count);
    for (ranks, input_shape) in m.ranks.iter().zip(&m.input_shapes) {
        let core = read_tensor(r)?;
        let l = input_shape.len();
        let mut bases = Vec::with_capacity(ranks.len());
        for _ in 0..ranks.len() {
            bases.push(tensor_to_matrix(&read_tensor(r)?)?);
        }
        let outputs = bases.split_off(l.min(bases.len()));
        let c = CoefficientTensor::new(core, bases, outputs)?;
        if c.tucker.ranks() != *ranks || c.input_shape != *input_shape || c.output_shape != m.output_shape {
            return Err(Error::format("model", "block shapes disagree with the manifest"));
        }
        coefficients.push(c);
    }
    let model = TrmvModel {
        coefficients,
        response_rank: m.response_rank.clone(),
        lambda: m.lambda,
        diagnostics: m.diagnostics.clone(),
    };
    Ok((model, m))
}

pub fn save_model(path: &Path, model: &TrmvModel, method: &str) -> Result<()> {
    let mut bytes = Vec::new();
    write_model(&mut bytes, model, method)?;
    write_file(path, |w| w.write_all(&bytes))
}

pub fn load_model(path: &Path) -> Result<(TrmvModel, ModelManifest)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let out = read_model(&mut r)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format("model", "trailing bytes"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use trmv_core::{DenseTensor, Matrix};

    fn zero_model() -> TrmvModel {
        let u = Matrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let v1 = Matrix::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let v2 = Matrix::from_fn(2, 1, |_, _| 0.5f64.sqrt());
        let core = DenseTensor::zeros(&[2, 1, 1]).unwrap();
        TrmvModel {
            coefficients: vec![CoefficientTensor::new(core, vec![u], vec![v1, v2]).unwrap()],
            response_rank: vec![1, 1],
            lambda: 1.0,
            diagnostics: FitDiagnostics::default(),
        }
    }

    #[test]
    fn roundtrip_and_zero_prediction() {
        let model = zero_model();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &model, "trmv").unwrap();
        let (back, manifest) = read_model(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, model);
        assert_eq!(manifest.ranks, vec![vec![2, 1, 1]]);
        let x = DenseTensor::from_fn(&[5, 4], |i| i[0] as f64 - i[1] as f64).unwrap();
        let y = back.predict(&[x]).unwrap();
        assert_eq!(y.shape(), &[5, 3, 2]);
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = Vec::new();
        write_model(&mut bytes, &zero_model(), "trmv").unwrap();
        assert!(read_model(&mut &bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(read_model(&mut bad.as_slice()).is_err());
    }
}
