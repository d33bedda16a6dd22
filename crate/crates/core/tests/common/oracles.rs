// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference computations used only by tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

/// Normal–Inverse-Gamma evidence of a univariate sample, written directly in
/// shape/rate form: σ² ~ IG(ν0/2, Λ0/2), μ | σ² ~ N(μ0, σ²/κ0).
pub fn nig_log_evidence(xs: &[f64], kappa0: f64, nu0: f64, lambda0: f64, mu0: f64) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let a0 = nu0 / 2.0;
    let b0 = lambda0 / 2.0;
    let kn = kappa0 + n;
    let an = a0 + n / 2.0;
    let bn = b0 + 0.5 * ss + kappa0 * n * (mean - mu0).powi(2) / (2.0 * kn);
    ln_gamma(an) - ln_gamma(a0) + a0 * b0.ln() - an * bn.ln() + 0.5 * (kappa0 / kn).ln()
        - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Unnormalized log posterior of a univariate mask by direct evaluation:
/// product of block evidences times Bernoulli(1/2) for the T − 1 free bits.
pub fn brute_force_log_posterior(xs: &[f64], bits: &[bool], kappa0: f64, nu0: f64, lambda0: f64, mu0: f64) -> f64 {
    let mut total = (xs.len() - 1) as f64 * 0.5f64.ln();
    let mut start = 0;
    for t in 1..=xs.len() {
        if t == xs.len() || bits[t] {
            total += nig_log_evidence(&xs[start..t], kappa0, nu0, lambda0, mu0);
            start = t;
        }
    }
    total
}

/// All masks of length T with bit 0 set, and their exact normalized probabilities.
pub fn enumerate_posterior(xs: &[f64], kappa0: f64, nu0: f64, lambda0: f64, mu0: f64) -> Vec<(Vec<bool>, f64)> {
    let t = xs.len();
    let masks: Vec<Vec<bool>> =
        (0..1u32 << (t - 1)).map(|code| (0..t).map(|i| i == 0 || code >> (i - 1) & 1 == 1).collect()).collect();
    let logs: Vec<f64> = masks.iter().map(|m| brute_force_log_posterior(xs, m, kappa0, nu0, lambda0, mu0)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    masks.into_iter().zip(logs).map(|(m, l)| (m, (l - max).exp() / z)).collect()
}

/// Exact bit marginals P(L_t = 1) from the enumeration.
pub fn exact_bit_marginals(xs: &[f64], kappa0: f64, nu0: f64, lambda0: f64, mu0: f64) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    for (mask, p) in enumerate_posterior(xs, kappa0, nu0, lambda0, mu0) {
        for (o, b) in out.iter_mut().zip(mask) {
            if b {
                *o += p;
            }
        }
    }
    out
}

/// Inverse-Wishart draw via the Bartlett decomposition of W ~ Wishart(ν, Λ⁻¹).
fn inverse_wishart<R: Rng>(nu: f64, scale_inv_chol: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let m = scale_inv_chol.nrows();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = ChiSquared::new(nu - i as f64).unwrap().sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let la = scale_inv_chol * a;
    let w = &la * la.transpose();
    w.try_inverse().unwrap()
}

/// Plain Monte Carlo estimate of log ∫ Π_t N(z_t; μ, Σ) dNIW(μ, Σ) over `draws`
/// prior samples.
pub fn monte_carlo_log_evidence<R: Rng>(
    block: &DMatrix<f64>,
    kappa0: f64,
    nu0: f64,
    lambda0: &DMatrix<f64>,
    mu0: &DVector<f64>,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let m = block.nrows();
    let scale_inv_chol = lambda0.clone().try_inverse().unwrap().cholesky().unwrap().l();
    let mut logs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let sigma = inverse_wishart(nu0, &scale_inv_chol, rng);
        let chol = sigma.clone().cholesky().unwrap();
        let l = chol.l();
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mu = mu0 + (&l * z) / kappa0.sqrt();
        let inv = chol.inverse();
        let logdet: f64 = (0..m).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
        let mut ll = 0.0;
        for col in block.column_iter() {
            let d = col - &mu;
            ll += -0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + (d.transpose() * &inv * &d)[(0, 0)]);
        }
        logs.push(ll);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + (logs.iter().map(|l| (l - max).exp()).sum::<f64>() / draws as f64).ln()
}

/// Plain proximal gradient (ISTA) on ||Aβ − X||² + λ||β||₁ with step 1/(2σ_max(A)²).
pub fn ista(a: &DMatrix<f64>, x: &DMatrix<f64>, lambda: f64, iterations: usize) -> DMatrix<f64> {
    let ata = a.transpose() * a;
    let atx = a.transpose() * x;
    let lip = 2.0 * ata.clone().symmetric_eigenvalues().max();
    let mut beta = DMatrix::zeros(a.ncols(), x.ncols());
    for _ in 0..iterations {
        let grad = (&ata * &beta - &atx) * 2.0;
        beta = (&beta - grad / lip).map(|v| {
            let t = lambda / lip;
            v.signum() * (v.abs() - t).max(0.0)
        });
    }
    beta
}
