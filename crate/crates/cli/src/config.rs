// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: one TOML or JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use khelm_core::elm::KhElmParams;
use khelm_core::pipeline::{Experiment, ExperimentConfig, SegmentationConfig};
use khelm_core::timeseries::{Orientation, SyntheticCohortSpec};
use khelm_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub orientation: Orientation,
    /// Generated cohort for `pipeline`, or the default spec for `synth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SyntheticCohortSpec>,
    /// Cohort loaded from disk for `pipeline`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    #[serde(default)]
    pub segmentation: SegmentationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<KhElmParams>,
    #[serde(default)]
    pub eval: EvalSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// One series CSV per subject.
    pub series: Vec<PathBuf>,
    /// Ground-truth JSON supplying one label per series, in the same order.
    pub truth: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    pub k: usize,
    pub repeats: usize,
    pub experiment: Experiment,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { k: 5, repeats: 30, experiment: Experiment::default() }
    }
}

/// Reads a TOML or JSON file, choosing the format by extension (`.json` is JSON,
/// anything else TOML).
pub fn read_structured<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|msg| Error::Config(format!("{}: {msg}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: RunConfig = read_structured(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(input) = &mut config.input {
            for p in input.series.iter_mut().chain(std::iter::once(&mut input.truth)) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Checks every nested section before any work starts.
    pub fn validate(&self) -> Result<()> {
        if let Some(spec) = &self.synth {
            spec.validate().map_err(|e| e.context("synth"))?;
        }
        if let Some(input) = &self.input {
            if input.series.is_empty() {
                return Err(Error::Config("input.series must list at least one file".into()));
            }
        }
        self.segmentation.validate().map_err(|e| e.context("segmentation"))?;
        if let Some(model) = &self.model {
            model.validate().map_err(|e| e.context("model"))?;
        }
        if self.eval.k < 2 {
            return Err(Error::Config(format!("eval.k must be at least 2, got {}", self.eval.k)));
        }
        if self.eval.repeats == 0 {
            return Err(Error::Config("eval.repeats must be at least 1".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<&KhElmParams> {
        self.model.as_ref().ok_or_else(|| Error::Config("the [model] section with layer_sizes is required".into()))
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            segmentation: self.segmentation.clone(),
            model: self.model()?.clone(),
            k: self.eval.k,
            repeats: self.eval.repeats,
        })
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.echo()).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
