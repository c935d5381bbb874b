//! Trained-network container.
//!
//! A model file is one JSON object:
//!
//! ```text
//! {
//!   "format": "gomimo-mlp",
//!   "version": 1,
//!   "widths": [4, 128, 64, 32, 16, 4],
//!   "activations": ["relu", "relu", "relu", "relu", "sigmoid"],
//!   "layers": [ { "weights": [[...], ...], "bias": [...] }, ... ],
//!   "train_config": { ... } | null
//! }
//! ```
//!
//! `weights` of layer k is `widths[k+1]` rows of `widths[k]` numbers. Numbers
//! are written as shortest round-trip doubles, so reading back a written
//! file reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::mlp::{Activation, MlpArchitecture, MlpParams};
use super::train::TrainConfig;

pub const MODEL_FORMAT: &str = "gomimo-mlp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub layers: Vec<LayerRecord>,
    pub train_config: Option<TrainConfig>,
}

impl ModelFile {
    pub fn new<T: Scalar>(params: &MlpParams<T>, train_config: Option<TrainConfig>) -> Self {
        let arch = params.architecture();
        Self {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            widths: arch.widths().to_vec(),
            activations: (0..arch.layer_count()).map(|k| arch.activation(k)).collect(),
            layers: params
                .weights()
                .iter()
                .zip(params.biases())
                .map(|(w, b)| LayerRecord {
                    weights: w.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
                    bias: b.iter().map(|v| v.as_f64()).collect(),
                })
                .collect(),
            train_config,
        }
    }

    pub fn params<T: Scalar>(&self) -> Result<MlpParams<T>> {
        if self.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unknown format `{}`", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", self.version)));
        }
        let arch = MlpArchitecture::new(self.widths.clone())?;
        let expected: Vec<Activation> = (0..arch.layer_count()).map(|k| arch.activation(k)).collect();
        if self.activations != expected {
            return Err(Error::ModelFormat(
                "activations must be relu on hidden layers and sigmoid on the output".into(),
            ));
        }
        if self.layers.len() != arch.layer_count() {
            return Err(Error::ModelFormat(format!(
                "expected {} layers, found {}",
                arch.layer_count(),
                self.layers.len()
            )));
        }
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let rows: Vec<Vec<T>> = layer.weights.iter().map(|r| r.iter().map(|&v| T::of(v)).collect()).collect();
            let w = if rows.is_empty() {
                Matrix::zeros(0, 0)
            } else {
                Matrix::from_rows(&rows).map_err(|_| Error::ModelFormat(format!("layer {k}: ragged weight rows")))?
            };
            weights.push(w);
            biases.push(layer.bias.iter().map(|&v| T::of(v)).collect());
        }
        MlpParams::from_parts(arch, weights, biases).map_err(|e| Error::ModelFormat(e.to_string()))
    }
}

pub fn write_model<T: Scalar>(path: &Path, params: &MlpParams<T>, train_config: Option<&TrainConfig>) -> Result<()> {
    let file = ModelFile::new(params, train_config.cloned());
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_model<T: Scalar>(path: &Path) -> Result<(MlpParams<T>, Option<TrainConfig>)> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok((file.params()?, file.train_config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ReceiverLocation;
    use crate::modulation::SchemeKind;
    use crate::rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let arch = MlpArchitecture::gosmp();
        let mut p = MlpParams::<f64>::glorot(&arch, &mut rng::stream(5, 1));
        p.biases_mut()[2][7] = -1.234_567_890_123_456_7e-300;
        p.biases_mut()[4][0] = std::f64::consts::PI;
        let cfg = TrainConfig::preset(SchemeKind::Gosmp, &ReceiverLocation::Center).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        write_model(&path, &p, Some(&cfg)).unwrap();
        let (q, c) = read_model::<f64>(&path).unwrap();
        assert_eq!(c, Some(cfg));
        for (a, b) in p.tensors().flatten().zip(q.tensors().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_bad_files() {
        let p = MlpParams::<f64>::zeros(&MlpArchitecture::gosm());
        let mut m = ModelFile::new(&p, None);
        m.version = 9;
        assert!(matches!(m.params::<f64>(), Err(Error::ModelFormat(_))));
        let mut m = ModelFile::new(&p, None);
        m.layers[1].bias.pop();
        assert!(matches!(m.params::<f64>(), Err(Error::ModelFormat(_))));
        let mut m = ModelFile::new(&p, None);
        m.activations[0] = Activation::Sigmoid;
        assert!(m.params::<f64>().is_err());
        assert!(serde_json::from_str::<ModelFile>(r#"{"format":"gomimo-mlp","extra":1}"#).is_err());
    }
}
