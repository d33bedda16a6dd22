// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Variant name, e.g. `bccpm=true` or `layers=3`.
    pub label: String,
    /// k rows of per-class accuracy, each averaged over the repeats.
    pub fold_accuracy: Vec<Vec<f64>>,
    pub class_average: Vec<f64>,
    /// Mean of `class_average`.
    pub mean_accuracy: f64,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub(crate) fn from_cells(fold_accuracy: Vec<Vec<f64>>, repeats: usize, seed: u64) -> Self {
        let k = fold_accuracy.len();
        let g = fold_accuracy.first().map_or(0, Vec::len);
        let class_average: Vec<f64> =
            (0..g).map(|c| fold_accuracy.iter().map(|row| row[c]).sum::<f64>() / k as f64).collect();
        let mean_accuracy = class_average.iter().sum::<f64>() / g.max(1) as f64;
        EvalReport {
            label: String::new(),
            fold_accuracy,
            class_average,
            mean_accuracy,
            folds: k,
            repeats,
            seed,
            config: serde_json::Value::Null,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>, config: serde_json::Value) -> Self {
        self.label = label.into();
        self.config = config;
        self
    }
}

/// Plain-text table: one row per fold, one column per class, then the average row.
pub fn render_table(report: &EvalReport) -> String {
    let g = report.class_average.len();
    let mut out = String::new();
    if !report.label.is_empty() {
        writeln!(out, "{}", report.label).unwrap();
    }
    write!(out, "{:<10}", "Fold").unwrap();
    for c in 0..g {
        write!(out, "{:>10}", format!("class-{c}")).unwrap();
    }
    out.push('\n');
    for (f, row) in report.fold_accuracy.iter().enumerate() {
        write!(out, "{:<10}", f + 1).unwrap();
        for v in row {
            write!(out, "{:>9.2}%", v * 100.0).unwrap();
        }
        out.push('\n');
    }
    write!(out, "{:<10}", "Average").unwrap();
    for v in &report.class_average {
        write!(out, "{:>9.2}%", v * 100.0).unwrap();
    }
    out.push('\n');
    out
}
