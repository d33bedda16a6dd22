// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end composition: per-subject segmentation and encoding, then the
//! scripted comparison experiments over a labelled cohort.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bccpm::{sample_posterior, ChangePointMask, McmcConfig, NiwPrior, PosteriorSummary, DEFAULT_KAPPA0};
use crate::elm::{HeadKernel, KhElmParams, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, EvalReport};
use crate::lbem::features_for_sample;
use crate::rng::{derive_seed, TAG_CHAIN};
use crate::timeseries::RoiTimeSeries;

/// Prior overrides; unset fields use the data-driven defaults of [`NiwPrior::default_for`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub kappa0: f64,
    pub nu0: Option<f64>,
    pub lambda_scale: Option<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig { kappa0: DEFAULT_KAPPA0, nu0: None, lambda_scale: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSettings {
    pub burn_in: usize,
    pub samples: usize,
    /// Defaults to `max(2, ⌈m/4⌉)`.
    pub min_block_length: Option<usize>,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings { burn_in: 500, samples: 1500, min_block_length: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentationConfig {
    pub prior: PriorConfig,
    pub mcmc: McmcSettings,
}

impl SegmentationConfig {
    pub fn prior_for(&self, series: &RoiTimeSeries) -> NiwPrior {
        NiwPrior::from_series(series, self.prior.kappa0, self.prior.nu0, self.prior.lambda_scale)
    }

    pub fn mcmc_for(&self, series: &RoiTimeSeries, seed: u64) -> McmcConfig {
        let mut cfg = McmcConfig::default_for(series.roi_count(), seed);
        cfg.burn_in = self.mcmc.burn_in;
        cfg.samples = self.mcmc.samples;
        if let Some(min) = self.mcmc.min_block_length {
            cfg.min_block_length = min;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior.kappa0 > 0.0 && self.prior.kappa0.is_finite()) {
            return Err(Error::Config("prior.kappa0 must be positive".into()));
        }
        if let Some(s) = self.prior.lambda_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("prior.lambda_scale must be positive".into()));
            }
        }
        if self.mcmc.samples == 0 {
            return Err(Error::Config("mcmc.samples must be at least 1".into()));
        }
        if self.mcmc.min_block_length == Some(0) {
            return Err(Error::Config("mcmc.min_block_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Runs the sampler on one series with the configured prior and chain settings.
pub fn detect(series: &RoiTimeSeries, config: &SegmentationConfig, seed: u64) -> Result<PosteriorSummary> {
    let prior = config.prior_for(series);
    let mcmc = config.mcmc_for(series, seed);
    sample_posterior(series, &prior, &mcmc)
}

/// Feature matrix (one row per subject) plus the masks used. With `segmentation`
/// unset every subject is encoded as a single block. Subject i samples its chain
/// from the stream `(seed, i)`.
pub fn cohort_features(
    series: &[RoiTimeSeries],
    segmentation: Option<&SegmentationConfig>,
    seed: u64,
) -> Result<(DMatrix<f64>, Vec<ChangePointMask>)> {
    let rows = series
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mask = match segmentation {
                Some(cfg) => {
                    detect(s, cfg, derive_seed(seed, &[TAG_CHAIN, i as u64]))
                        .map_err(|e| e.context(format!("segmenting subject {}", i + 1)))?
                        .map_mask
                }
                None => ChangePointMask::single_block(s.len()),
            };
            let f = features_for_sample(s, &mask).map_err(|e| e.context(format!("encoding subject {}", i + 1)))?;
            Ok((f, mask))
        })
        .collect::<Result<Vec<_>>>()?;
    let width = rows.first().map_or(0, |(f, _)| f.len());
    if rows.iter().any(|(f, _)| f.len() != width) {
        return Err(Error::Dimension("subjects have different ROI counts".into()));
    }
    let features = DMatrix::from_fn(rows.len(), width, |i, j| rows[i].0[j]);
    Ok((features, rows.into_iter().map(|(_, m)| m).collect()))
}

/// Class index for a ±1 label: +1 is class 0, −1 is class 1.
pub fn class_index(label: i32) -> Result<usize> {
    match label {
        1 => Ok(0),
        -1 => Ok(1),
        other => Err(Error::Config(format!("labels must be +1 or -1, got {other}"))),
    }
}

pub fn label_of(class: usize) -> i32 {
    if class == 0 {
        1
    } else {
        -1
    }
}

pub fn labelled_dataset(features: DMatrix<f64>, labels: &[i32]) -> Result<LabeledDataset> {
    let classes = labels.iter().map(|&l| class_index(l)).collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(features, classes, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// One cross-validated run of the full pipeline.
    #[default]
    CrossValidate,
    /// Full pipeline with and without change-point segmentation.
    BccpmAblation,
    /// KH-ELM with rbf and linear heads.
    KernelCompare,
    /// KH-ELM with 1 through 6 hidden layers.
    DepthSweep,
}

pub const DEPTH_SWEEP_MAX: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    pub model: KhElmParams,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_k() -> usize {
    5
}

fn default_repeats() -> usize {
    30
}

/// Labelled subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub series: Vec<RoiTimeSeries>,
    pub labels: Vec<i32>,
}

/// Runs one scripted experiment. Every variant shares the fold plans and model
/// streams derived from `seed`, so differences come from the varied stage only.
pub fn run_comparison(
    cohort: &Cohort,
    experiment: Experiment,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    config.segmentation.validate()?;
    config.model.validate()?;
    if cohort.series.len() != cohort.labels.len() {
        return Err(Error::Dimension("cohort has mismatched series and labels".into()));
    }
    let echo = |extra: serde_json::Value| -> serde_json::Value {
        let mut v = serde_json::to_value(config).expect("config serializes");
        v["experiment"] = serde_json::to_value(experiment).expect("experiment serializes");
        if let (Some(obj), Some(extra)) = (v.as_object_mut(), extra.as_object()) {
            obj.extend(extra.clone());
        }
        v
    };
    let evaluate = |features: &DMatrix<f64>, params: &KhElmParams| -> Result<EvalReport> {
        let data = labelled_dataset(features.clone(), &cohort.labels)?;
        cross_validate(&data, params, config.k, config.repeats, seed)
    };

    let segmented = || -> Result<DMatrix<f64>> {
        log::info!("segmenting {} subjects", cohort.series.len());
        Ok(cohort_features(&cohort.series, Some(&config.segmentation), seed)?.0)
    };

    match experiment {
        Experiment::CrossValidate => {
            let features = segmented()?;
            let report = evaluate(&features, &config.model)?;
            Ok(vec![report.with_label("khelm", echo(serde_json::json!({"bccpm": true})))])
        }
        Experiment::BccpmAblation => {
            let with = segmented()?;
            let without = cohort_features(&cohort.series, None, seed)?.0;
            let mut out = Vec::new();
            for (flag, features) in [(true, &with), (false, &without)] {
                log::info!("evaluating bccpm={flag}");
                let report = evaluate(features, &config.model)?;
                out.push(report.with_label(format!("bccpm={flag}"), echo(serde_json::json!({"bccpm": flag}))));
            }
            Ok(out)
        }
        Experiment::KernelCompare => {
            let features = segmented()?;
            let sigma = match config.model.kernel {
                HeadKernel::Rbf { sigma } => sigma,
                HeadKernel::Linear => None,
            };
            let mut out = Vec::new();
            for (name, kernel) in [("rbf", HeadKernel::Rbf { sigma }), ("linear", HeadKernel::Linear)] {
                log::info!("evaluating kernel={name}");
                let params = KhElmParams { kernel, ..config.model.clone() };
                let report = evaluate(&features, &params)?;
                out.push(
                    report
                        .with_label(format!("kernel={name}"), echo(serde_json::json!({"bccpm": true, "kernel": name}))),
                );
            }
            Ok(out)
        }
        Experiment::DepthSweep => {
            let features = segmented()?;
            let width = config.model.layer_sizes[0];
            let mut out = Vec::new();
            for layers in 1..=DEPTH_SWEEP_MAX {
                log::info!("evaluating layers={layers}");
                let params = KhElmParams { layer_sizes: vec![width; layers], ..config.model.clone() };
                let report = evaluate(&features, &params)?;
                out.push(report.with_label(
                    format!("layers={layers}"),
                    echo(serde_json::json!({"bccpm": true, "layers": layers})),
                ));
            }
            Ok(out)
        }
    }
}
