// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use khelm_core::bccpm::ChangePointMask;
use khelm_core::elm::{predict_khelm, train_khelm, HeadKernel, KhElmModel, KhElmParams, LabeledDataset};
use khelm_core::eval::{cross_validate, render_table, EvalReport};
use khelm_core::lbem::{features_for_sample, format_feature_csv, load_feature_csv};
use khelm_core::pipeline::{
    class_index, detect, label_of, labelled_dataset, run_comparison, Cohort, Experiment, DEPTH_SWEEP_MAX,
};
use khelm_core::timeseries::{format_series, generate_synthetic, load_series, GroundTruth, SyntheticCohortSpec};
use khelm_core::{Error, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{read_structured, RunConfig};

/// Seed and configuration shared by every command of one invocation.
pub struct Run {
    pub config: RunConfig,
    pub seed: u64,
}

impl Run {
    fn provenance(&self) -> Value {
        json!({
            "seed": self.seed,
            "config_hash": self.config.hash(),
        })
    }

    /// JSON value with `seed`, `config_hash` and `config` added at the top level.
    fn stamped(&self, body: impl Serialize) -> Result<Value> {
        let mut value = serde_json::to_value(body)?;
        let obj = value.as_object_mut().ok_or_else(|| Error::Config("output body is not a JSON object".into()))?;
        obj.insert("seed".into(), json!(self.seed));
        obj.insert("config_hash".into(), json!(self.config.hash()));
        obj.entry("config").or_insert_with(|| self.config.echo());
        Ok(value)
    }

    /// Sidecar for CSV outputs, which have nowhere to carry provenance.
    fn write_manifest(&self, path: &Path, files: &[PathBuf]) -> Result<()> {
        let names: Vec<String> = files
            .iter()
            .map(|f| f.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect();
        let body = self.stamped(json!({ "files": names }))?;
        write_json(path, &body)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn manifest_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    csv.with_file_name(format!("{stem}.manifest.json"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn synth(run: &Run, spec_path: Option<&Path>, out: &Path) -> Result<()> {
    let spec: SyntheticCohortSpec = match spec_path {
        Some(p) => read_structured(p)?,
        None => run
            .config
            .synth
            .clone()
            .ok_or_else(|| Error::Config("synth needs --spec or a [synth] config section".into()))?,
    };
    spec.validate()?;
    let (series, truth) = generate_synthetic(&spec, run.seed)?;
    ensure_dir(out)?;
    let width = series.len().to_string().len().max(3);
    let mut files = Vec::with_capacity(series.len());
    for (i, s) in series.iter().enumerate() {
        let path = out.join(format!("subject_{:0width$}.csv", i + 1));
        write_text(&path, &format_series(s))?;
        files.push(path);
    }
    let mut truth_json = run.stamped(&truth)?;
    truth_json["config"] = serde_json::to_value(&spec)?;
    write_json(&out.join("ground_truth.json"), &truth_json)?;
    run.write_manifest(&out.join("manifest.json"), &files)
}

pub fn detect_cmd(run: &Run, series_path: &Path, out: &Path) -> Result<()> {
    let series = load_series(series_path, run.config.orientation)?;
    let summary = detect(&series, &run.config.segmentation, run.seed).map_err(|e| e.context("detect"))?;
    let body = json!({
        "T": summary.map_mask.len(),
        "change_points": summary.map_mask.change_points(),
        "map_log_posterior": summary.map_log_posterior,
        "marginal_probability": summary.marginal_probability,
        "config": serde_json::to_value(&run.config.segmentation)?,
    });
    write_json(out, &run.stamped(body)?)
}

fn read_mask(path: &Path) -> Result<ChangePointMask> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn encode(
    run: &Run,
    series_path: &Path,
    mask_path: Option<&Path>,
    label: i32,
    out: &Path,
    append: bool,
) -> Result<()> {
    class_index(label)?;
    let series = load_series(series_path, run.config.orientation)?;
    let mask = match mask_path {
        Some(p) => read_mask(p)?,
        None => ChangePointMask::single_block(series.len()),
    };
    mask.check_against(&series)?;
    let features = features_for_sample(&series, &mask).map_err(|e| e.context("encode"))?;
    let row = DMatrix::from_row_slice(1, features.len(), &features);
    let (labels, matrix) = if append && out.exists() {
        let (mut labels, old) = load_feature_csv(out)?;
        if old.ncols() != row.ncols() {
            return Err(Error::Dimension(format!(
                "{} has {} feature columns, this series gives {}",
                out.display(),
                old.ncols(),
                row.ncols()
            )));
        }
        labels.push(label);
        let n = old.nrows();
        let mut stacked = old.insert_rows(n, 1, 0.0);
        stacked.row_mut(n).copy_from(&row);
        (labels, stacked)
    } else {
        (vec![label], row)
    };
    write_text(out, &format_feature_csv(&labels, &matrix)?)?;
    run.write_manifest(&manifest_path(out), &[out.to_path_buf()])
}

fn read_dataset(path: &Path) -> Result<(Vec<i32>, LabeledDataset)> {
    let (labels, features) = load_feature_csv(path)?;
    let data = labelled_dataset(features, &labels).map_err(|e| e.context(format!("labels in {}", path.display())))?;
    Ok((labels, data))
}

pub fn train(run: &Run, features_path: &Path, out: &Path) -> Result<()> {
    let (_, data) = read_dataset(features_path)?;
    let model = train_khelm(&data, run.config.model()?, run.seed).map_err(|e| e.context("train"))?;
    let mut provenance = run.provenance();
    provenance["config"] = serde_json::to_value(run.config.model()?)?;
    let mut text = model.to_json_with(Some(provenance))?;
    text.push('\n');
    write_text(out, &text)
}

fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect()
}

/// Writes one `report_<variant>.json` per report and a `summary.txt` with the tables.
fn write_reports(run: &Run, reports: &[EvalReport], out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let mut summary = format!("# seed: {}\n# config_hash: {}\n", run.seed, run.config.hash());
    for report in reports {
        let name = if report.label.is_empty() { "report".to_string() } else { slug(&report.label) };
        write_json(&out.join(format!("report_{name}.json")), &run.stamped(report)?)?;
        summary.push('\n');
        summary.push_str(&render_table(report));
        summary.push_str(&format!("mean per-class accuracy: {:.2}%\n", report.mean_accuracy * 100.0));
    }
    write_text(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn eval(run: &Run, features_path: &Path, model_path: Option<&Path>, out: &Path) -> Result<()> {
    let (labels, data) = read_dataset(features_path)?;
    if let Some(model_path) = model_path {
        let text = std::fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
        let model = KhElmModel::from_json(&text).map_err(|e| e.context(model_path.display().to_string()))?;
        let (_, predicted) = predict_khelm(&model, data.features()).map_err(|e| e.context("eval"))?;
        let mut hits = [0usize; 2];
        let mut totals = [0usize; 2];
        for (&truth, &p) in data.classes().iter().zip(&predicted) {
            totals[truth] += 1;
            hits[truth] += usize::from(truth == p);
        }
        let class_accuracy: Vec<f64> =
            (0..2).map(|c| if totals[c] > 0 { hits[c] as f64 / totals[c] as f64 } else { 0.0 }).collect();
        let body = json!({
            "labels": labels,
            "predicted": predicted.iter().map(|&c| label_of(c)).collect::<Vec<_>>(),
            "class_accuracy": class_accuracy,
            "mean_accuracy": class_accuracy.iter().sum::<f64>() / 2.0,
            "model": model_path.display().to_string(),
        });
        ensure_dir(out)?;
        return write_json(&out.join("predictions.json"), &run.stamped(body)?);
    }

    let params = run.config.model()?;
    let experiment = run.config.eval.experiment;
    let (k, repeats) = (run.config.eval.k, run.config.eval.repeats);
    let mut variants: Vec<(String, KhElmParams)> = Vec::new();
    match experiment {
        Experiment::CrossValidate => variants.push(("khelm".into(), params.clone())),
        Experiment::KernelCompare => {
            let sigma = match params.kernel {
                HeadKernel::Rbf { sigma } => sigma,
                HeadKernel::Linear => None,
            };
            for (name, kernel) in [("rbf", HeadKernel::Rbf { sigma }), ("linear", HeadKernel::Linear)] {
                variants.push((format!("kernel={name}"), KhElmParams { kernel, ..params.clone() }));
            }
        }
        Experiment::DepthSweep => {
            let width = params.layer_sizes[0];
            for layers in 1..=DEPTH_SWEEP_MAX {
                variants.push((
                    format!("layers={layers}"),
                    KhElmParams { layer_sizes: vec![width; layers], ..params.clone() },
                ));
            }
        }
        Experiment::BccpmAblation => {
            return Err(Error::Config("bccpm-ablation needs raw series; run it with `pipeline`".into()))
        }
    }
    let mut reports = Vec::new();
    for (label, p) in variants {
        log::info!("evaluating {label}");
        let report = cross_validate(&data, &p, k, repeats, run.seed).map_err(|e| e.context("eval"))?;
        let echo = json!({ "model": p, "k": k, "repeats": repeats, "experiment": experiment });
        reports.push(report.with_label(label, echo));
    }
    write_reports(run, &reports, out)
}

fn load_cohort(run: &Run) -> Result<Cohort> {
    match (&run.config.synth, &run.config.input) {
        (Some(spec), None) => {
            log::info!("generating synthetic cohort");
            let (series, truth) = generate_synthetic(spec, run.seed).map_err(|e| e.context("synth"))?;
            Ok(Cohort { series, labels: truth.labels() })
        }
        (None, Some(input)) => {
            let truth: GroundTruth = read_structured(&input.truth)?;
            if truth.subjects.len() != input.series.len() {
                return Err(Error::Config(format!(
                    "{} lists {} subjects but input.series has {} files",
                    input.truth.display(),
                    truth.subjects.len(),
                    input.series.len()
                )));
            }
            let series = input
                .series
                .iter()
                .map(|p| load_series(p, run.config.orientation))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context("load"))?;
            let labels = truth.labels();
            for &l in &labels {
                class_index(l)?;
            }
            Ok(Cohort { series, labels })
        }
        (Some(_), Some(_)) => Err(Error::Config("set either [synth] or [input], not both".into())),
        (None, None) => Err(Error::Config("pipeline needs a [synth] or [input] section".into())),
    }
}

pub fn pipeline(run: &Run, out: &Path) -> Result<()> {
    let experiment_config = run.config.experiment_config()?;
    let cohort = load_cohort(run)?;
    let reports = run_comparison(&cohort, run.config.eval.experiment, &experiment_config, run.seed)?;
    write_reports(run, &reports, out)
}
