// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::linalg::min_norm_lstsq;
use super::Activation;
use crate::error::{Error, Result};

/// Random hidden layer `h(w_i · x + b_i)` with L nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmHiddenLayer {
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    pub activation: Activation,
}

impl ElmHiddenLayer {
    /// Weights and biases uniform on [−1, 1].
    pub fn random<R: Rng>(input_dim: usize, nodes: usize, activation: Activation, rng: &mut R) -> Self {
        let weights = DMatrix::from_fn(nodes, input_dim, |_, _| rng.random_range(-1.0..=1.0));
        let biases = DVector::from_fn(nodes, |_, _| rng.random_range(-1.0..=1.0));
        ElmHiddenLayer { weights, biases, activation }
    }

    pub fn node_count(&self) -> usize {
        self.weights.nrows()
    }
}

/// Hidden output matrix H (N×L), `H[j][i] = h(w_i · x_j + b_i)`.
pub fn elm_hidden(features: &DMatrix<f64>, layer: &ElmHiddenLayer) -> Result<DMatrix<f64>> {
    if features.ncols() != layer.weights.ncols() || layer.biases.len() != layer.weights.nrows() {
        return Err(Error::Dimension(format!(
            "features have {} columns, layer expects {} inputs and {} biases for {} nodes",
            features.ncols(),
            layer.weights.ncols(),
            layer.biases.len(),
            layer.weights.nrows()
        )));
    }
    let mut h = features * layer.weights.transpose();
    for mut row in h.row_iter_mut() {
        row += layer.biases.transpose();
    }
    layer.activation.apply_mut(&mut h);
    Ok(h)
}

/// Output weights `β = H† Z`, the minimum-norm least-squares solution.
pub fn solve_output_weights(h: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h.nrows() != z.nrows() {
        return Err(Error::Dimension(format!("H has {} rows, Z has {}", h.nrows(), z.nrows())));
    }
    if h.iter().chain(z.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in H or Z".into()));
    }
    Ok(min_norm_lstsq(h, z))
}
