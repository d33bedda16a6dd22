// SPDX-License-Identifier: MIT OR Apache-2.0

//! Kernel hierarchical ELM: min–max scaling, greedily stacked sparse-autoencoder
//! layers (no fine-tuning), and a kernel ELM head on the last layer's output.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fista::FistaConfig;
use super::kelm::{predict_kelm, train_kelm, KelmModel};
use super::kernel::{HeadKernel, KernelSpec};
use super::sparse::{forward_layer, train_sparse_layer, SparseLayer};
use super::{Activation, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaling {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let (min, max) = x.column_iter().map(|c| (c.min(), c.max())).unzip();
        MinMaxScaling { min, max }
    }

    /// Maps each feature to [0, 1], clipping values outside the fitted range.
    /// Constant features map to 0.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.min.len() {
            return Err(Error::Dimension(format!("model expects {} features, got {}", self.min.len(), x.ncols())));
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |j, k| {
            let span = self.max[k] - self.min[k];
            if span > 0.0 {
                ((x[(j, k)] - self.min[k]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KhElmParams {
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub kernel: HeadKernel,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub fista: FistaConfig,
    #[serde(default)]
    pub activation: Activation,
}

fn default_rho() -> f64 {
    1.0
}

impl KhElmParams {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() || self.layer_sizes.contains(&0) {
            return Err(Error::Config("layer_sizes must be a nonempty list of positive sizes".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if let HeadKernel::Rbf { sigma: Some(s) } = self.kernel {
            KernelSpec::Rbf { sigma: s }.validate()?;
        }
        self.fista.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KhElmModel {
    pub scaling: MinMaxScaling,
    pub layers: Vec<SparseLayer>,
    pub head: KelmModel,
}

fn run_layers(x: DMatrix<f64>, layers: &[SparseLayer]) -> Result<DMatrix<f64>> {
    layers.iter().try_fold(x, |h, layer| forward_layer(&h, layer))
}

pub fn train_khelm(data: &LabeledDataset, params: &KhElmParams, seed: u64) -> Result<KhElmModel> {
    params.validate()?;
    let scaling = MinMaxScaling::fit(data.features());
    let mut h = scaling.apply(data.features())?;
    let mut layers = Vec::with_capacity(params.layer_sizes.len());
    for (i, &size) in params.layer_sizes.iter().enumerate() {
        let layer = train_sparse_layer(&h, size, params.activation, &params.fista, derive_seed(seed, &[i as u64]))
            .map_err(|e| e.context(format!("training hidden layer {}", i + 1)))?;
        h = forward_layer(&h, &layer)?;
        layers.push(layer);
    }
    let kernel = params.kernel.resolve(&h)?;
    let head_data = LabeledDataset::new(h, data.classes().to_vec(), data.class_count())?;
    let head = train_kelm(&head_data, kernel, params.rho)?;
    Ok(KhElmModel { scaling, layers, head })
}

pub fn predict_khelm(model: &KhElmModel, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let h = run_layers(model.scaling.apply(x)?, &model.layers)?;
    predict_kelm(&model.head, &h)
}

// Versioned JSON model file.

const FORMAT_VERSION: u32 = 1;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, rows: &[Vec<f64>], cols_hint: usize) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(cols_hint, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("model field {name} is not rectangular")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    beta: Vec<Vec<f64>>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadFile {
    kernel: KernelSpec,
    rho: f64,
    alpha: Vec<Vec<f64>>,
    training_features: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    scaling: MinMaxScaling,
    layers: Vec<LayerFile>,
    head: HeadFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

impl KhElmModel {
    pub fn to_json(&self) -> Result<String> {
        self.to_json_with(None)
    }

    /// Model file with an extra free-form `provenance` object (seed, config hash, ...).
    /// Loading ignores it.
    pub fn to_json_with(&self, provenance: Option<serde_json::Value>) -> Result<String> {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            scaling: self.scaling.clone(),
            layers: self.layers.iter().map(|l| LayerFile { beta: rows(&l.beta), activation: l.activation }).collect(),
            head: HeadFile {
                kernel: self.head.kernel,
                rho: self.head.rho,
                alpha: rows(&self.head.alpha),
                training_features: rows(&self.head.training_features),
            },
            provenance,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format_version {}", file.format_version)));
        }
        let layers = file
            .layers
            .iter()
            .map(|l| Ok(SparseLayer { beta: matrix("layers.beta", &l.beta, 0)?, activation: l.activation }))
            .collect::<Result<Vec<_>>>()?;
        let training_features = matrix("head.training_features", &file.head.training_features, 0)?;
        let alpha = matrix("head.alpha", &file.head.alpha, 0)?;
        let mut expected_in = file.scaling.min.len();
        for l in &layers {
            if l.input_dim() != expected_in {
                return Err(Error::Dimension("layer input dimensions do not chain".into()));
            }
            expected_in = l.output_dim();
        }
        if training_features.ncols() != expected_in || alpha.nrows() != training_features.nrows() {
            return Err(Error::Dimension("head shapes do not match the layer stack".into()));
        }
        file.head.kernel.validate()?;
        Ok(KhElmModel {
            scaling: file.scaling,
            layers,
            head: KelmModel { training_features, alpha, kernel: file.head.kernel, rho: file.head.rho },
        })
    }
}
