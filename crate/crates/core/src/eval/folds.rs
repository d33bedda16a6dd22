// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of every sample.
    pub assignments: Vec<usize>,
    pub repeat_index: usize,
    pub seed: u64,
}

impl FoldPlan {
    /// Training and test indices for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != f)
    }
}

/// Shuffles each class with the seeded stream and deals its samples round-robin
/// over the k folds.
pub fn stratified_folds(classes: &[usize], k: usize, seed: u64, repeat_index: usize) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let class_count = classes.iter().max().map_or(0, |&c| c + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; classes.len()];
    for class in 0..class_count {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == class).collect();
        if members.len() < k {
            return Err(Error::Plan { class, count: members.len(), k });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignments[i] = pos % k;
        }
    }
    Ok(FoldPlan { k, assignments, repeat_index, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold_counts(plan: &FoldPlan, classes: &[usize], class: usize) -> Vec<usize> {
        let mut counts = vec![0; plan.k];
        for (i, &f) in plan.assignments.iter().enumerate() {
            if classes[i] == class {
                counts[f] += 1;
            }
        }
        counts
    }

    #[test]
    fn balanced_when_divisible() {
        let classes: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let plan = stratified_folds(&classes, 5, 3, 0).unwrap();
        assert_eq!(fold_counts(&plan, &classes, 0), vec![2; 5]);
        assert_eq!(fold_counts(&plan, &classes, 1), vec![2; 5]);
    }

    #[test]
    fn sizes_differ_by_at_most_one() {
        let classes: Vec<usize> = std::iter::repeat_n(0, 11).chain(std::iter::repeat_n(1, 10)).collect();
        let plan = stratified_folds(&classes, 5, 4, 0).unwrap();
        let c0 = fold_counts(&plan, &classes, 0);
        assert!(c0.iter().all(|&c| c == 2 || c == 3));
        assert_eq!(c0.iter().sum::<usize>(), 11);
    }

    #[test]
    fn deterministic_and_partitioning() {
        let classes: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let a = stratified_folds(&classes, 5, 8, 1).unwrap();
        assert_eq!(a, stratified_folds(&classes, 5, 8, 1).unwrap());
        let mut seen = [0; 30];
        for f in 0..5 {
            let (train, test) = a.split(f);
            assert_eq!(train.len() + test.len(), 30);
            test.iter().for_each(|&i| seen[i] += 1);
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn too_few_samples_names_class() {
        let classes = vec![0, 0, 0, 0, 0, 1, 1, 1];
        match stratified_folds(&classes, 5, 0, 0) {
            Err(Error::Plan { class, count, k }) => assert_eq!((class, count, k), (1, 3, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
