// SPDX-License-Identifier: MIT OR Apache-2.0

//! Normal–Inverse-Wishart block evidence.
//!
//! For a block of `n` columns with mean `x̄` and scatter `S`, the conjugate
//! marginal likelihood is
//!
//! ```text
//! log p = −(n m / 2) log π + log Γ_m(ν_n / 2) − log Γ_m(ν_0 / 2)
//!         + (ν_0 / 2) log|Λ_0| − (ν_n / 2) log|Λ_n| + (m / 2)(log κ_0 − log κ_n)
//! κ_n = κ_0 + n,  ν_n = ν_0 + n,
//! Λ_n = Λ_0 + S + κ_0 n / (κ_0 + n) · (x̄ − μ_0)(x̄ − μ_0)ᵀ
//! ```
//!
//! Determinants only ever appear as Cholesky log-determinants.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::mask::ChangePointMask;
use crate::error::{Error, Result};
use crate::timeseries::RoiTimeSeries;

pub const DEFAULT_KAPPA0: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NiwPrior {
    pub kappa0: f64,
    pub nu0: f64,
    pub lambda0: DMatrix<f64>,
    pub mu0: DVector<f64>,
}

impl NiwPrior {
    /// Weakly informative default: `μ_0` the per-ROI mean, `κ_0 = 0.05`, `ν_0 = m + 2`,
    /// `Λ_0` the identity scaled by the pooled per-ROI variance.
    ///
    /// With `κ_0 = 1` the prior on each block mean is as tight as the data spread,
    /// so fresh blocks cost almost nothing and iid series fragment into
    /// minimum-length blocks under the uniform mask prior.
    pub fn default_for(series: &RoiTimeSeries) -> Self {
        Self::from_series(series, DEFAULT_KAPPA0, None, None)
    }

    /// Default prior with optional overrides for `κ_0`, `ν_0` and the scale of `Λ_0`.
    pub fn from_series(series: &RoiTimeSeries, kappa0: f64, nu0: Option<f64>, lambda_scale: Option<f64>) -> Self {
        let m = series.roi_count();
        let v = series.values();
        let mu0 = v.column_mean();
        let scale = lambda_scale.unwrap_or_else(|| {
            let t = series.len();
            let ss: f64 =
                v.row_iter().zip(mu0.iter()).map(|(row, mu)| row.iter().map(|x| (x - mu).powi(2)).sum::<f64>()).sum();
            let pooled = ss / (m * t.saturating_sub(1).max(1)) as f64;
            if pooled > 0.0 && pooled.is_finite() {
                pooled
            } else {
                1.0
            }
        });
        NiwPrior { kappa0, nu0: nu0.unwrap_or(m as f64 + 2.0), lambda0: DMatrix::identity(m, m) * scale, mu0 }
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m == 0 {
            return Err(Error::Config("prior dimension must be positive".into()));
        }
        if self.lambda0.shape() != (m, m) {
            return Err(Error::Dimension(format!("lambda0 is {:?}, expected {m}x{m}", self.lambda0.shape())));
        }
        if !(self.kappa0 > 0.0 && self.kappa0.is_finite()) {
            return Err(Error::Config(format!("kappa0 must be positive, got {}", self.kappa0)));
        }
        if !(self.nu0 > m as f64 - 1.0 && self.nu0.is_finite()) {
            return Err(Error::Config(format!("nu0 must exceed m - 1 = {}, got {}", m - 1, self.nu0)));
        }
        if (&self.lambda0 - self.lambda0.transpose()).amax() > 1e-10 {
            return Err(Error::Config("lambda0 must be symmetric".into()));
        }
        if self.lambda0.clone().cholesky().is_none() {
            return Err(Error::Config("lambda0 must be positive definite".into()));
        }
        Ok(())
    }
}

/// `log Γ_m(a)`.
pub fn ln_multivariate_gamma(m: usize, a: f64) -> f64 {
    let mf = m as f64;
    mf * (mf - 1.0) / 4.0 * PI.ln() + (1..=m).map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0)).sum::<f64>()
}

pub(crate) fn spd_log_det(m: DMatrix<f64>) -> Option<f64> {
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    let ld: f64 = (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    ld.is_finite().then_some(ld)
}

/// Block statistics relative to the prior mean: count, `Σ (x − μ_0)`, and scatter
/// about the block mean.
pub(crate) struct BlockStats {
    pub n: usize,
    pub centered_sum: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

impl BlockStats {
    fn from_block(block: &DMatrix<f64>, mu0: &DVector<f64>) -> Self {
        let n = block.ncols();
        let mean = block.column_mean();
        let mut scatter = DMatrix::zeros(block.nrows(), block.nrows());
        for col in block.column_iter() {
            let d = col - &mean;
            scatter.ger(1.0, &d, &d, 1.0);
        }
        BlockStats { n, centered_sum: (mean - mu0) * n as f64, scatter }
    }
}

/// Prior-only terms reused across every block scored under one prior.
#[derive(Debug, Clone)]
pub(crate) struct PriorTerms {
    m: usize,
    kappa0: f64,
    nu0: f64,
    lambda0: DMatrix<f64>,
    half_nu0_logdet: f64,
    ln_gamma_nu0: f64,
}

impl PriorTerms {
    pub fn new(prior: &NiwPrior) -> Result<Self> {
        prior.validate()?;
        let m = prior.dim();
        let logdet = spd_log_det(prior.lambda0.clone())
            .ok_or_else(|| Error::Config("lambda0 must be positive definite".into()))?;
        Ok(PriorTerms {
            m,
            kappa0: prior.kappa0,
            nu0: prior.nu0,
            lambda0: prior.lambda0.clone(),
            half_nu0_logdet: 0.5 * prior.nu0 * logdet,
            ln_gamma_nu0: ln_multivariate_gamma(m, prior.nu0 / 2.0),
        })
    }

    /// Evidence of a block from its statistics. `None` when `Λ_n` is not numerically
    /// positive definite.
    pub fn score(&self, stats: &BlockStats) -> Option<f64> {
        let n = stats.n as f64;
        let m = self.m as f64;
        let kn = self.kappa0 + n;
        let nun = self.nu0 + n;
        let diff = &stats.centered_sum / n;
        let mut lambda_n = &self.lambda0 + &stats.scatter;
        lambda_n.ger(self.kappa0 * n / kn, &diff, &diff, 1.0);
        let logdet_n = spd_log_det(lambda_n)?;
        let v = -0.5 * n * m * PI.ln() + ln_multivariate_gamma(self.m, nun / 2.0) - self.ln_gamma_nu0
            + self.half_nu0_logdet
            - 0.5 * nun * logdet_n
            + 0.5 * m * (self.kappa0.ln() - kn.ln());
        v.is_finite().then_some(v)
    }
}

/// Log marginal likelihood of one block under the NIW prior.
pub fn log_marginal_likelihood(block: &RoiTimeSeries, prior: &NiwPrior) -> Result<f64> {
    let terms = PriorTerms::new(prior)?;
    if block.roi_count() != terms.m {
        return Err(Error::Dimension(format!("block has {} rows, prior dimension is {}", block.roi_count(), terms.m)));
    }
    let stats = BlockStats::from_block(block.values(), &prior.mu0);
    terms.score(&stats).ok_or_else(|| {
        Error::Numerical(format!("posterior scale matrix not positive definite for a block of {} columns", block.len()))
    })
}

/// Unnormalized log posterior of a mask: block evidences plus the Bernoulli(½)
/// prior on the T − 1 free bits.
pub fn log_posterior(mask: &ChangePointMask, series: &RoiTimeSeries, prior: &NiwPrior) -> Result<f64> {
    mask.check_against(series)?;
    let terms = PriorTerms::new(prior)?;
    if series.roi_count() != terms.m {
        return Err(Error::Dimension(format!(
            "series has {} rows, prior dimension is {}",
            series.roi_count(),
            terms.m
        )));
    }
    let mut total = 0.0;
    for (s, e) in mask.blocks() {
        let block = series.values().columns(s, e - s).into_owned();
        let stats = BlockStats::from_block(&block, &prior.mu0);
        total += terms.score(&stats).ok_or_else(|| {
            Error::Numerical(format!("posterior scale matrix not positive definite for block [{}, {}]", s + 1, e))
        })?;
    }
    Ok(total + (series.len() - 1) as f64 * 0.5f64.ln())
}

/// Prefix-sum scorer for arbitrary column ranges of one series, used by the sampler.
pub(crate) struct BlockScorer {
    terms: PriorTerms,
    // Prefix sums of centered columns and of their outer products (upper and lower stored).
    sums: Vec<DVector<f64>>,
    outer: Vec<DMatrix<f64>>,
}

impl BlockScorer {
    pub fn new(series: &RoiTimeSeries, prior: &NiwPrior) -> Result<Self> {
        let terms = PriorTerms::new(prior)?;
        let m = series.roi_count();
        if m != terms.m {
            return Err(Error::Dimension(format!("series has {m} rows, prior dimension is {}", terms.m)));
        }
        let t = series.len();
        let mut sums = Vec::with_capacity(t + 1);
        let mut outer = Vec::with_capacity(t + 1);
        sums.push(DVector::zeros(m));
        outer.push(DMatrix::zeros(m, m));
        for col in series.values().column_iter() {
            let x = col - &prior.mu0;
            let s = sums.last().unwrap() + &x;
            let mut o = outer.last().unwrap().clone();
            o.ger(1.0, &x, &x, 1.0);
            sums.push(s);
            outer.push(o);
        }
        Ok(BlockScorer { terms, sums, outer })
    }

    /// Evidence of columns `[start, end)`.
    pub fn score(&self, start: usize, end: usize) -> Result<f64> {
        let n = (end - start) as f64;
        let sum = &self.sums[end] - &self.sums[start];
        let mut scatter = &self.outer[end] - &self.outer[start];
        scatter.ger(-1.0 / n, &sum, &sum, 1.0);
        let stats = BlockStats { n: end - start, centered_sum: sum, scatter };
        self.terms.score(&stats).ok_or_else(|| {
            Error::Numerical(format!("posterior scale matrix not positive definite for block [{}, {}]", start + 1, end))
        })
    }
}
