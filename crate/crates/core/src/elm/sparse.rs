// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::DMatrix;

use super::fista::{fista_lasso, FistaConfig};
use super::hidden::{elm_hidden, ElmHiddenLayer};
use super::Activation;
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_LAYER};

/// One ELM sparse-autoencoder layer: `β` (L×p) maps a p-dimensional input to L
/// outputs through `g(H βᵀ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLayer {
    pub beta: DMatrix<f64>,
    pub activation: Activation,
}

impl SparseLayer {
    pub fn input_dim(&self) -> usize {
        self.beta.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.beta.nrows()
    }
}

/// Fits `β = argmin ||Aβ − X||² + λ||β||₁` where `A = g(X Wᵀ + b)` is a random
/// mapping with W, b uniform on [−1, 1] drawn from `seed`.
pub fn train_sparse_layer(
    x: &DMatrix<f64>,
    node_count: usize,
    activation: Activation,
    fista: &FistaConfig,
    seed: u64,
) -> Result<SparseLayer> {
    if x.nrows() == 0 || node_count == 0 {
        return Err(Error::Config(format!(
            "sparse layer needs N >= 1 and L >= 1, got N = {}, L = {node_count}",
            x.nrows()
        )));
    }
    let mut rng = stream(seed, &[TAG_LAYER]);
    let mapping = ElmHiddenLayer::random(x.ncols(), node_count, activation, &mut rng);
    let a = elm_hidden(x, &mapping)?;
    let beta = fista_lasso(&a, x, fista)?;
    Ok(SparseLayer { beta, activation })
}

/// `g(H_prev · βᵀ)`.
pub fn forward_layer(h_prev: &DMatrix<f64>, layer: &SparseLayer) -> Result<DMatrix<f64>> {
    if h_prev.ncols() != layer.input_dim() {
        return Err(Error::Dimension(format!("layer expects {} inputs, got {}", layer.input_dim(), h_prev.ncols())));
    }
    let mut h = h_prev * layer.beta.transpose();
    layer.activation.apply_mut(&mut h);
    Ok(h)
}
