// SPDX-License-Identifier: MIT OR Apache-2.0

//! Extreme learning machines: random-feature ELM, kernel ELM, the L1 sparse
//! ELM autoencoder (trained with constant-step FISTA), and the stacked kernel
//! hierarchical ELM.

mod fista;
mod hidden;
mod kelm;
mod kernel;
mod khelm;
mod linalg;
mod sparse;

pub use fista::{fista_lasso, lasso_objective, FistaConfig};
pub use hidden::{elm_hidden, solve_output_weights, ElmHiddenLayer};
pub use kelm::{predict_kelm, train_kelm, KelmModel};
pub use kernel::{kernel_matrix, median_pairwise_distance, HeadKernel, KernelSpec};
pub use khelm::{predict_khelm, train_khelm, KhElmModel, KhElmParams, MinMaxScaling};
pub use sparse::{forward_layer, train_sparse_layer, SparseLayer};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    pub(crate) fn apply_mut(self, m: &mut DMatrix<f64>) {
        m.apply(|v| *v = self.apply(*v));
    }
}

/// Feature rows with one-vs-rest ±1 targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DMatrix<f64>,
    targets: DMatrix<f64>,
    classes: Vec<usize>,
}

impl LabeledDataset {
    /// `classes[j]` is the class index of row j, in `0..class_count`.
    pub fn new(features: DMatrix<f64>, classes: Vec<usize>, class_count: usize) -> Result<Self> {
        let n = features.nrows();
        if classes.len() != n {
            return Err(Error::Dimension(format!("{} labels for {n} feature rows", classes.len())));
        }
        if class_count < 2 || n < class_count {
            return Err(Error::Config(format!("need at least 2 classes and N >= G, got N = {n}, G = {class_count}")));
        }
        if let Some(&c) = classes.iter().find(|&&c| c >= class_count) {
            return Err(Error::Config(format!("class index {c} out of range 0..{class_count}")));
        }
        let targets = DMatrix::from_fn(n, class_count, |j, g| if classes[j] == g { 1.0 } else { -1.0 });
        Ok(LabeledDataset { features, targets, classes })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.targets.ncols()
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(indices),
            targets: self.targets.select_rows(indices),
            classes: indices.iter().map(|&i| self.classes[i]).collect(),
        }
    }
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (g, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_are_plus_minus_one() {
        let d = LabeledDataset::new(DMatrix::zeros(3, 2), vec![0, 1, 1], 2).unwrap();
        assert_eq!(d.targets().row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -1.0]);
        assert_eq!(d.targets().row(2).iter().copied().collect::<Vec<_>>(), vec![-1.0, 1.0]);
        assert!(LabeledDataset::new(DMatrix::zeros(1, 2), vec![0], 2).is_err());
        assert!(LabeledDataset::new(DMatrix::zeros(2, 2), vec![0, 2], 2).is_err());
    }

    #[test]
    fn argmax_ties_and_shift_invariance() {
        let s = DMatrix::from_row_slice(3, 2, &[0.5, 0.5, -1.0, 2.0, 3.0, 1.0]);
        assert_eq!(argmax_rows(&s), vec![0, 1, 0]);
        let shifted = s.map(|v| v + 17.25);
        assert_eq!(argmax_rows(&shifted), argmax_rows(&s));
    }
}
