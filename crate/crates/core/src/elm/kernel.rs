// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully specified kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Rbf { sigma: f64 },
    Linear,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::Config(format!("rbf sigma must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }
}

/// Kernel choice for a classifier head; an rbf width left unset is resolved by
/// the median heuristic on the head's training inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HeadKernel {
    Rbf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Linear,
}

impl Default for HeadKernel {
    fn default() -> Self {
        HeadKernel::Rbf { sigma: None }
    }
}

impl HeadKernel {
    pub fn resolve(&self, training: &DMatrix<f64>) -> Result<KernelSpec> {
        let spec = match *self {
            HeadKernel::Rbf { sigma: Some(sigma) } => KernelSpec::Rbf { sigma },
            HeadKernel::Rbf { sigma: None } => {
                let median = median_pairwise_distance(training);
                KernelSpec::Rbf { sigma: if median > 0.0 { median } else { 1.0 } }
            }
            HeadKernel::Linear => KernelSpec::Linear,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Median Euclidean distance over all distinct row pairs (0 with fewer than two rows).
pub fn median_pairwise_distance(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for p in 0..n {
        for q in p + 1..n {
            d.push((x.row(p) - x.row(q)).norm());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    }
}

/// `K[p][q] = K(x_p, y_q)` for rows of X (N×d) and Y (M×d).
pub fn kernel_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    if x.ncols() != y.ncols() {
        return Err(Error::Dimension(format!("kernel inputs have {} and {} columns", x.ncols(), y.ncols())));
    }
    let cross = x * y.transpose();
    Ok(match *kernel {
        KernelSpec::Linear => cross,
        KernelSpec::Rbf { sigma } => {
            let xn: Vec<f64> = x.row_iter().map(|r| r.norm_squared()).collect();
            let yn: Vec<f64> = y.row_iter().map(|r| r.norm_squared()).collect();
            let denom = 2.0 * sigma * sigma;
            DMatrix::from_fn(x.nrows(), y.nrows(), |p, q| {
                let sq = (xn[p] + yn[q] - 2.0 * cross[(p, q)]).max(0.0);
                (-sq / denom).exp()
            })
        }
    })
}
