// SPDX-License-Identifier: MIT OR Apache-2.0

//! Constant-step FISTA for `min_β ||Aβ − X||²_F + λ||β||₁`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FistaConfig {
    pub iterations: usize,
    pub l1_weight: f64,
    /// Multiplier (≥ 1) on the power-iteration estimate of the Lipschitz constant.
    pub lipschitz_boost: f64,
}

impl Default for FistaConfig {
    fn default() -> Self {
        FistaConfig { iterations: 200, l1_weight: 1e-3, lipschitz_boost: 1.01 }
    }
}

impl FistaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("fista.iterations must be at least 1".into()));
        }
        if !(self.l1_weight >= 0.0 && self.l1_weight.is_finite()) {
            return Err(Error::Config("fista.l1_weight must be non-negative".into()));
        }
        if !(self.lipschitz_boost >= 1.0 && self.lipschitz_boost.is_finite()) {
            return Err(Error::Config("fista.lipschitz_boost must be at least 1".into()));
        }
        Ok(())
    }
}

const POWER_STEPS: usize = 100;

/// Largest eigenvalue of the symmetric PSD matrix `gram` by power iteration
/// from a fixed start vector.
fn largest_eigenvalue(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_034).fract());
    v.normalize_mut();
    let mut lambda = 0.0;
    for _ in 0..POWER_STEPS {
        let w = gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda.max((gram * &v).norm())
}

pub fn lasso_objective(a: &DMatrix<f64>, x: &DMatrix<f64>, beta: &DMatrix<f64>, l1_weight: f64) -> f64 {
    (a * beta - x).norm_squared() + l1_weight * beta.iter().map(|v| v.abs()).sum::<f64>()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Solves the lasso columnwise for β (L×d) given A (N×L) and X (N×d).
///
/// Step size is `1/γ` with `γ = boost · 2 σ_max(A)²`; starts from `β_0 = y_1 = 0`,
/// `t_1 = 1` and runs exactly `config.iterations` steps of
///
/// ```text
/// β_i     = S_{λ/γ}(y_i − (2/γ) Aᵀ(A y_i − X))
/// t_{i+1} = (1 + √(1 + 4 t_i²)) / 2
/// y_{i+1} = β_i + ((t_i − 1) / t_{i+1}) (β_i − β_{i−1})
/// ```
pub fn fista_lasso(a: &DMatrix<f64>, x: &DMatrix<f64>, config: &FistaConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    if a.nrows() != x.nrows() {
        return Err(Error::Dimension(format!("A has {} rows, X has {}", a.nrows(), x.nrows())));
    }
    let l = a.ncols();
    let d = x.ncols();
    let ata = a.transpose() * a;
    let atx = a.transpose() * x;
    let gamma = config.lipschitz_boost * 2.0 * largest_eigenvalue(&ata);
    if !gamma.is_finite() {
        return Err(Error::Numerical("non-finite Lipschitz estimate".into()));
    }
    let mut beta = DMatrix::zeros(l, d);
    if gamma == 0.0 {
        // A = 0: the smooth term is constant and the l1 term is minimized at 0.
        return Ok(beta);
    }
    let step = 2.0 / gamma;
    let threshold = config.l1_weight / gamma;

    let mut y = beta.clone();
    let mut t = 1.0f64;
    for iteration in 1..=config.iterations {
        // y − (2/γ)(AᵀA y − AᵀX)
        let mut next = &ata * &y;
        next -= &atx;
        next *= -step;
        next += &y;
        next.apply(|v| *v = soft_threshold(*v, threshold));

        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        y = &next + (&next - &beta) * momentum;
        beta = next;
        t = t_next;

        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("FISTA diverged at iteration {iteration}")));
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn power_iteration_matches_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = gaussian(30, 12, &mut rng);
        let ata = a.transpose() * &a;
        let exact = ata.clone().symmetric_eigenvalues().max();
        assert!((largest_eigenvalue(&ata) - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn zero_penalty_recovers_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::identity(8, 8) * 2.0 + gaussian(8, 8, &mut rng) * 0.1;
        let x = gaussian(8, 3, &mut rng);
        let cfg = FistaConfig { iterations: 500, l1_weight: 0.0, lipschitz_boost: 1.01 };
        let beta = fista_lasso(&a, &x, &cfg).unwrap();
        let exact = a.clone().try_inverse().unwrap() * &x;
        assert!((&beta - &exact).amax() < 1e-8);
        let opt = lasso_objective(&a, &x, &exact, 0.0);
        assert!((lasso_objective(&a, &x, &beta, 0.0) - opt).abs() < 1e-8);
    }

    #[test]
    fn huge_penalty_gives_exact_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = gaussian(20, 10, &mut rng);
        let x = gaussian(20, 2, &mut rng);
        let lam = 2.0 * (a.transpose() * &x).amax();
        let cfg = FistaConfig { iterations: 50, l1_weight: lam, lipschitz_boost: 1.01 };
        let beta = fista_lasso(&a, &x, &cfg).unwrap();
        assert!(beta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_design_returns_zero() {
        let beta =
            fista_lasso(&DMatrix::zeros(4, 3), &DMatrix::from_element(4, 2, 1.0), &FistaConfig::default()).unwrap();
        assert_eq!(beta, DMatrix::zeros(3, 2));
    }

    #[test]
    fn smooth_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = gaussian(12, 6, &mut rng);
        let x = gaussian(12, 2, &mut rng);
        let f = |b: &DMatrix<f64>| (&a * b - &x).norm_squared();
        for _ in 0..20 {
            let b = gaussian(6, 2, &mut rng);
            let grad = (a.transpose() * (&a * &b - &x)) * 2.0;
            let h = 1e-5;
            for i in 0..6 {
                for j in 0..2 {
                    let mut bp = b.clone();
                    let mut bm = b.clone();
                    bp[(i, j)] += h;
                    bm[(i, j)] -= h;
                    let fd = (f(&bp) - f(&bm)) / (2.0 * h);
                    let g = grad[(i, j)];
                    assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0), "fd {fd} vs {g}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let bad = FistaConfig { iterations: 0, ..FistaConfig::default() };
        assert!(fista_lasso(&DMatrix::zeros(2, 2), &DMatrix::zeros(2, 2), &bad).is_err());
        assert!(fista_lasso(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 2), &FistaConfig::default()).is_err());
    }
}
