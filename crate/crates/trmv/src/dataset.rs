//! Datasets on disk: a directory holding `manifest.json`, one tensor file
//! per input, the complete response, the training mask and the generating
//! coefficients.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trmv_core::datagen::describe;
use trmv_core::{DenseTensor, GeneratorParams, ObservationMask, SyntheticDataset};

use crate::error::{Error, Result};
use crate::io::{load_mask, load_tensor, mask_bytes, save_mask, save_tensor, tensor_bytes};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub generator: String,
    pub description: String,
    pub seed: u64,
    pub params: GeneratorParams,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub inputs: Vec<String>,
    pub response: String,
    pub mask: String,
    pub coefficients: Vec<String>,
}

pub fn save_dataset(dir: &Path, d: &SyntheticDataset) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let inputs: Vec<String> = (1..=d.inputs.len()).map(|j| format!("x{j}.tnsr")).collect();
    let coefficients: Vec<String> = (1..=d.coefficients.len()).map(|j| format!("b{j}.tnsr")).collect();
    for (name, x) in inputs.iter().zip(&d.inputs) {
        save_tensor(&dir.join(name), x)?;
    }
    for (name, b) in coefficients.iter().zip(&d.coefficients) {
        save_tensor(&dir.join(name), b)?;
    }
    save_tensor(&dir.join("y.tnsr"), &d.response)?;
    save_mask(&dir.join("train.mask"), &d.mask)?;
    let manifest = DatasetManifest {
        generator: d.generator().to_string(),
        description: describe(&d.params, d.seed),
        seed: d.seed,
        params: d.params.clone(),
        train: d.train.clone(),
        test: d.test.clone(),
        inputs,
        response: "y.tnsr".into(),
        mask: "train.mask".into(),
        coefficients,
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<SyntheticDataset> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: DatasetManifest = serde_json::from_str(&text)?;
    let inputs = m
        .inputs
        .iter()
        .map(|f| load_tensor(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let coefficients = m
        .coefficients
        .iter()
        .map(|f| load_tensor(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    let response = load_tensor(&dir.join(&m.response))?;
    let mask = load_mask(&dir.join(&m.mask))?;
    check_consistent(&inputs, &response, &mask, &m)?;
    Ok(SyntheticDataset {
        params: m.params,
        seed: m.seed,
        inputs,
        response,
        mask,
        train: m.train,
        test: m.test,
        coefficients,
    })
}

fn check_consistent(
    inputs: &[DenseTensor],
    response: &DenseTensor,
    mask: &ObservationMask,
    m: &DatasetManifest,
) -> Result<()> {
    let samples = response.shape()[0];
    if inputs.is_empty() || inputs.iter().any(|x| x.shape()[0] != samples) {
        return Err(Error::format("dataset", "inputs and response disagree on the sample count"));
    }
    if m.train.iter().chain(&m.test).any(|&i| i >= samples) {
        return Err(Error::format("dataset", "split index out of range"));
    }
    let mut want = response.shape().to_vec();
    want[0] = m.train.len();
    if mask.shape() != want.as_slice() {
        return Err(Error::format(
            "dataset",
            format!("mask shape {:?}, training response {want:?}", mask.shape()),
        ));
    }
    Ok(())
}

/// SHA-256 over everything a fit and its evaluation read: training inputs,
/// observed training response, mask, test inputs and test response.
pub fn checksum(d: &SyntheticDataset) -> Result<String> {
    let mut h = Sha256::new();
    for x in d.train_inputs()? {
        h.update(tensor_bytes(&x));
    }
    h.update(tensor_bytes(&d.observed_response()?));
    h.update(mask_bytes(&d.mask));
    for x in d.test_inputs()? {
        h.update(tensor_bytes(&x));
    }
    h.update(tensor_bytes(&d.test_response()?));
    Ok(hex::encode(h.finalize()))
}

/// The stacked inputs and complete response of one split.
pub fn split(d: &SyntheticDataset, name: &str) -> Result<(Vec<DenseTensor>, DenseTensor)> {
    match name {
        "train" => Ok((d.train_inputs()?, d.train_response()?)),
        "test" => Ok((d.test_inputs()?, d.test_response()?)),
        other => Err(Error::Config(format!("unknown split `{other}` (train or test)"))),
    }
}
