// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise-stationary synthetic cohorts with planted regime shifts.
//!
//! Every subject starts in a white-noise regime with zero mean. At each planted
//! change point the mean moves by `mean_shift` along a subject-specific random
//! unit direction, and the mixing matrix `A` (with covariance `noise² A Aᵀ`) is
//! blended toward a random rotation: `A ← (1 − p) A + p Q_k`. The rotation `Q_k`
//! for the k-th change is drawn once per cohort, so regimes reached through the
//! same number of changes share a connectivity pattern across subjects.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RoiTimeSeries;
use crate::bccpm::ChangePointMask;
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_ROTATION, TAG_SUBJECT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCohortSpec {
    pub subjects_per_class: usize,
    pub roi_count: usize,
    pub length: usize,
    /// 1-indexed change times for class +1 (time 1 is implicit).
    pub change_points_class_a: Vec<usize>,
    /// 1-indexed change times for class −1.
    pub change_points_class_b: Vec<usize>,
    pub mean_shift: f64,
    pub covariance_perturbation: f64,
    pub noise_scale: f64,
}

impl SyntheticCohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects_per_class == 0 {
            return Err(Error::Spec("subjects_per_class must be positive".into()));
        }
        if self.roi_count == 0 {
            return Err(Error::Spec("roi_count must be positive".into()));
        }
        if self.length < 2 {
            return Err(Error::Spec("length must be at least 2".into()));
        }
        for (name, cps) in [
            ("change_points_class_a", &self.change_points_class_a),
            ("change_points_class_b", &self.change_points_class_b),
        ] {
            if let Some(&bad) = cps.iter().find(|&&c| c < 2 || c > self.length) {
                return Err(Error::Spec(format!("{name}: change point {bad} outside [2, {}]", self.length)));
            }
            if cps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Spec(format!("{name}: change points must be strictly increasing")));
            }
        }
        if !self.mean_shift.is_finite() {
            return Err(Error::Spec("mean_shift must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.covariance_perturbation) {
            return Err(Error::Spec("covariance_perturbation must lie in [0, 1]".into()));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Spec("noise_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectTruth {
    /// +1 for class a, −1 for class b.
    pub label: i32,
    /// 1-indexed, always starting with 1.
    pub change_points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subjects: Vec<SubjectTruth>,
    #[serde(rename = "T")]
    pub length: usize,
}

impl GroundTruth {
    pub fn masks(&self) -> Result<Vec<ChangePointMask>> {
        self.subjects.iter().map(|s| ChangePointMask::from_change_points(self.length, &s.change_points)).collect()
    }

    pub fn labels(&self) -> Vec<i32> {
        self.subjects.iter().map(|s| s.label).collect()
    }
}

fn random_rotation(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Sign fix makes the draw Haar distributed.
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn random_direction(m: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn generate_subject(
    spec: &SyntheticCohortSpec,
    change_points: &[usize],
    rotations: &[DMatrix<f64>],
    mut rng: ChaCha8Rng,
) -> RoiTimeSeries {
    let m = spec.roi_count;
    let p = spec.covariance_perturbation;
    let mut mean = DVector::zeros(m);
    let mut mixing = DMatrix::identity(m, m);
    let mut values = DMatrix::zeros(m, spec.length);
    let mut next_change = 0;
    for t in 0..spec.length {
        if next_change < change_points.len() && change_points[next_change] == t + 1 {
            mean += random_direction(m, &mut rng) * spec.mean_shift;
            mixing = &mixing * (1.0 - p) + &rotations[next_change] * p;
            next_change += 1;
        }
        let eps = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &mean + (&mixing * eps) * spec.noise_scale;
        values.set_column(t, &x);
    }
    RoiTimeSeries::new(values).expect("generator produces finite values")
}

/// Draws a labelled cohort: `subjects_per_class` subjects of class +1 followed by
/// the same number of class −1. Pure function of `(spec, seed)`.
pub fn generate_synthetic(spec: &SyntheticCohortSpec, seed: u64) -> Result<(Vec<RoiTimeSeries>, GroundTruth)> {
    spec.validate()?;
    let max_changes = spec.change_points_class_a.len().max(spec.change_points_class_b.len());
    let rotations: Vec<_> = (0..max_changes)
        .map(|k| random_rotation(spec.roi_count, &mut stream(seed, &[TAG_ROTATION, k as u64])))
        .collect();

    let n = spec.subjects_per_class;
    let plan: Vec<(i32, &[usize])> = (0..2 * n)
        .map(|i| {
            if i < n {
                (1, spec.change_points_class_a.as_slice())
            } else {
                (-1, spec.change_points_class_b.as_slice())
            }
        })
        .collect();

    let series = plan
        .par_iter()
        .enumerate()
        .map(|(i, (_, cps))| generate_subject(spec, cps, &rotations, stream(seed, &[TAG_SUBJECT, i as u64])))
        .collect();

    let subjects = plan
        .iter()
        .map(|&(label, cps)| SubjectTruth {
            label,
            change_points: std::iter::once(1).chain(cps.iter().copied()).collect(),
        })
        .collect();
    Ok((series, GroundTruth { subjects, length: spec.length }))
}
