// SPDX-License-Identifier: MIT OR Apache-2.0

//! Repeated stratified k-fold cross-validation with per-class accuracy.

mod folds;
mod report;

pub use folds::{stratified_folds, FoldPlan};
pub use report::{render_table, EvalReport};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elm::{predict_kelm, predict_khelm, train_kelm, train_khelm, HeadKernel, KhElmParams, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, TAG_FOLDS, TAG_MODEL};

/// Anything that can be trained on one split and label another.
pub trait Classifier: Sync {
    fn fit_predict(&self, train: &LabeledDataset, test: &DMatrix<f64>, seed: u64) -> Result<Vec<usize>>;
}

/// Classifier choices available to the harness and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Kelm {
        #[serde(default)]
        kernel: HeadKernel,
        rho: f64,
    },
    Khelm(KhElmParams),
}

impl Classifier for ClassifierConfig {
    fn fit_predict(&self, train: &LabeledDataset, test: &DMatrix<f64>, seed: u64) -> Result<Vec<usize>> {
        match self {
            ClassifierConfig::Kelm { kernel, rho } => {
                let spec = kernel.resolve(train.features())?;
                let model = train_kelm(train, spec, *rho)?;
                Ok(predict_kelm(&model, test)?.1)
            }
            ClassifierConfig::Khelm(params) => {
                let model = train_khelm(train, params, seed)?;
                Ok(predict_khelm(&model, test)?.1)
            }
        }
    }
}

impl Classifier for KhElmParams {
    fn fit_predict(&self, train: &LabeledDataset, test: &DMatrix<f64>, seed: u64) -> Result<Vec<usize>> {
        let model = train_khelm(train, self, seed)?;
        Ok(predict_khelm(&model, test)?.1)
    }
}

/// Fraction of class-c test samples labelled c, for every class.
fn per_class_accuracy(truth: &[usize], predicted: &[usize], class_count: usize) -> Vec<f64> {
    let mut hits = vec![0usize; class_count];
    let mut totals = vec![0usize; class_count];
    for (&t, &p) in truth.iter().zip(predicted) {
        totals[t] += 1;
        hits[t] += usize::from(t == p);
    }
    hits.iter().zip(&totals).map(|(&h, &n)| if n > 0 { h as f64 / n as f64 } else { 0.0 }).collect()
}

/// Runs `repeats` rounds of stratified k-fold CV. Round r uses the fold plan
/// seeded by `(seed, r)`; the model for fold f of round r gets the stream
/// `(seed, r, f)`. Cells are per-fold, per-class accuracies averaged over rounds.
pub fn cross_validate(
    data: &LabeledDataset,
    classifier: &dyn Classifier,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<EvalReport> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let g = data.class_count();
    let plans = (0..repeats)
        .map(|r| stratified_folds(data.classes(), k, derive_seed(seed, &[TAG_FOLDS, r as u64]), r))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize)> = (0..repeats).flat_map(|r| (0..k).map(move |f| (r, f))).collect();
    let cells = tasks
        .par_iter()
        .map(|&(r, f)| {
            let plan = &plans[r];
            let (train_idx, test_idx) = plan.split(f);
            let train = data.subset(&train_idx);
            let test = data.subset(&test_idx);
            let model_seed = derive_seed(seed, &[TAG_MODEL, r as u64, f as u64]);
            let predicted = classifier
                .fit_predict(&train, test.features(), model_seed)
                .map_err(|e| e.context(format!("repeat {}, fold {}", r + 1, f + 1)))?;
            Ok(per_class_accuracy(test.classes(), &predicted, g))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fold_accuracy = vec![vec![0.0; g]; k];
    for (&(_, f), acc) in tasks.iter().zip(&cells) {
        for (c, a) in acc.iter().enumerate() {
            fold_accuracy[f][c] += a;
        }
    }
    for row in &mut fold_accuracy {
        row.iter_mut().for_each(|v| *v /= repeats as f64);
    }
    Ok(EvalReport::from_cells(fold_accuracy, repeats, seed))
}
