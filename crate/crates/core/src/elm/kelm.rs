// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::DMatrix;

use super::kernel::{kernel_matrix, KernelSpec};
use super::{argmax_rows, LabeledDataset};
use crate::error::{Error, Result};

/// Kernel ELM: `α = (I/ρ + Ω)⁻¹ Z` over the stored training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct KelmModel {
    pub training_features: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub kernel: KernelSpec,
    pub rho: f64,
}

pub fn train_kelm(data: &LabeledDataset, kernel: KernelSpec, rho: f64) -> Result<KelmModel> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Config(format!("rho must be positive, got {rho}")));
    }
    let x = data.features();
    let mut system = kernel_matrix(x, x, &kernel)?;
    if system.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Gram matrix".into()));
    }
    for i in 0..system.nrows() {
        system[(i, i)] += 1.0 / rho;
    }
    let alpha = system
        .cholesky()
        .map(|c| c.solve(data.targets()))
        .filter(|a| a.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Numerical("kernel system I/rho + Omega is not positive definite".into()))?;
    Ok(KelmModel { training_features: x.clone(), alpha, kernel, rho })
}

/// Scores (M×G) and argmax labels for the rows of `x`.
pub fn predict_kelm(model: &KelmModel, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<usize>)> {
    if x.ncols() != model.training_features.ncols() {
        return Err(Error::Dimension(format!(
            "model expects {} features, got {}",
            model.training_features.ncols(),
            x.ncols()
        )));
    }
    let k = kernel_matrix(x, &model.training_features, &model.kernel)?;
    let scores = k * &model.alpha;
    let labels = argmax_rows(&scores);
    Ok((scores, labels))
}
