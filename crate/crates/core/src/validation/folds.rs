use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ValidationError;

/// Fold id per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub folds: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    /// Row indices of fold `f`, ascending.
    pub fn rows_in(&self, f: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == f).collect()
    }

    /// Row indices outside fold `f`, ascending.
    pub fn rows_outside(&self, f: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != f).collect()
    }
}

/// Shuffles each class with the seed and deals its rows round-robin over the
/// folds; dealing continues where the previous class stopped, so fold sizes
/// as well as per-class fold counts differ by at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment, ValidationError> {
    if k < 2 {
        return Err(ValidationError::Parameter(format!("k must be >= 2, got {k}")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; labels.len()];
    let mut warnings = Vec::new();
    let mut next = 0usize;
    for (c, rows) in by_class.iter_mut().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            warnings.push(format!(
                "class {c} has {} rows, fewer than k = {k}; some folds lack it",
                rows.len()
            ));
        }
        rows.shuffle(&mut rng);
        for &r in rows.iter() {
            folds[r] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment {
        folds,
        k,
        seed,
        warnings,
    })
}

/// Plain shuffled K-fold without stratification.
pub fn random_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment, ValidationError> {
    if k < 2 {
        return Err(ValidationError::Parameter(format!("k must be >= 2, got {k}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0usize; n];
    for (pos, &r) in order.iter().enumerate() {
        folds[r] = pos % k;
    }
    Ok(FoldAssignment {
        folds,
        k,
        seed,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per_fold(a: &FoldAssignment, labels: &[usize], class: usize) -> Vec<usize> {
        let mut c = vec![0; a.k];
        for (i, &l) in labels.iter().enumerate() {
            if l == class {
                c[a.folds[i]] += 1;
            }
        }
        c
    }

    #[test]
    fn six_four_split_in_two() {
        let labels = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let a = stratified_folds(&labels, 2, 9).unwrap();
        assert_eq!(per_fold(&a, &labels, 0), [3, 3]);
        assert_eq!(per_fold(&a, &labels, 1), [2, 2]);
    }

    #[test]
    fn uniform_labels_even_folds() {
        let labels: Vec<usize> = (0..100).map(|i| i % 8).collect();
        let a = stratified_folds(&labels, 5, 1).unwrap();
        for f in 0..5 {
            assert_eq!(a.rows_in(f).len(), 20);
        }
        let same = vec![3usize; 100];
        let b = stratified_folds(&same, 5, 1).unwrap();
        for f in 0..5 {
            assert_eq!(b.rows_in(f).len(), 20);
        }
    }

    #[test]
    fn deterministic() {
        let labels: Vec<usize> = (0..57).map(|i| (i * 7) % 3).collect();
        assert_eq!(stratified_folds(&labels, 4, 77).unwrap(), stratified_folds(&labels, 4, 77).unwrap());
        assert_ne!(stratified_folds(&labels, 4, 77).unwrap().folds, stratified_folds(&labels, 4, 78).unwrap().folds);
    }

    #[test]
    fn small_class_warns_and_k_below_two_errors() {
        let a = stratified_folds(&[0, 0, 0, 1], 3, 0).unwrap();
        assert_eq!(a.warnings.len(), 1);
        assert!(stratified_folds(&[0, 1], 1, 0).is_err());
        assert!(random_folds(5, 0, 0).is_err());
    }
}
