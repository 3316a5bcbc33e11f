use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_schema, check_training_input, LearnerError, ProbabilityMatrix};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `⌊sqrt(n_features)⌋`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 300,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.trees < 1 {
            return Err(LearnerError::Parameter("trees must be >= 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(LearnerError::Parameter("min_samples_leaf must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(LearnerError::Parameter("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForestNode {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// Class counts of the training rows that reached the leaf.
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub nodes: Vec<ForestNode>,
}

impl ClassificationTree {
    fn leaf(&self, row: &[f64]) -> &[u32] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                ForestNode::Leaf { counts } => return counts,
                ForestNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right } as usize,
            }
        }
    }
}

/// Bagged Gini trees; probabilities are the mean of per-tree leaf class
/// distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<ClassificationTree>,
    pub params: ForestParams,
    pub feature_names: Vec<String>,
}

fn gini_weighted(counts: &[u32], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = f64::from(n);
    let sq: f64 = counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
    n - sq / n
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    n_classes: usize,
    min_leaf: usize,
    max_features: usize,
    nodes: Vec<ForestNode>,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.n_classes];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    /// Best Gini split of `rows` on `feature`: `(weighted impurity, threshold)`.
    fn split_on(&self, rows: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut order: Vec<(f64, usize)> = rows.iter().map(|&r| (self.x.get(r, feature), self.y[r])).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = order.len();
        let mut right = vec![0u32; self.n_classes];
        for &(_, c) in &order {
            right[c] += 1;
        }
        let mut left = vec![0u32; self.n_classes];
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            let c = order[i].1;
            left[c] += 1;
            right[c] -= 1;
            let (a, b) = (order[i].0, order[i + 1].0);
            if a == b {
                continue;
            }
            let nl = i + 1;
            if nl < self.min_leaf || n - nl < self.min_leaf {
                continue;
            }
            let imp = gini_weighted(&left, nl as u32) + gini_weighted(&right, (n - nl) as u32);
            if best.map_or(true, |(bi, _)| imp < bi) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some((imp, threshold));
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> u32 {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        self.nodes.push(ForestNode::Leaf { counts: counts.clone() });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.min_leaf {
            return id as u32;
        }
        let n_features = self.x.n_cols();
        let mut candidates: Vec<usize> = sample(rng, n_features, self.max_features.min(n_features)).into_vec();
        let mut best: Option<(f64, f64, usize)> = None;
        let search = |cands: &[usize], best: &mut Option<(f64, f64, usize)>| {
            for &f in cands {
                if let Some((imp, thr)) = self.split_on(&rows, f) {
                    if best.map_or(true, |(bi, _, bf)| imp < bi || (imp == bi && f < bf)) {
                        *best = Some((imp, thr, f));
                    }
                }
            }
        };
        search(&candidates, &mut best);
        if best.is_none() {
            candidates.sort_unstable();
            let rest: Vec<usize> = (0..n_features).filter(|f| candidates.binary_search(f).is_err()).collect();
            search(&rest, &mut best);
        }
        let Some((_, threshold, feature)) = best else {
            return id as u32;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id] = ForestNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id as u32
    }
}

pub fn fit_forest(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
) -> Result<ForestModel, LearnerError> {
    params.validate()?;
    check_training_input(x, y, n_classes)?;
    let n = y.len();
    let max_features = params
        .max_features
        .unwrap_or_else(|| ((x.n_cols() as f64).sqrt().floor() as usize).max(1));
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut g = Grower {
                x,
                y,
                n_classes,
                min_leaf: params.min_samples_leaf,
                max_features,
                nodes: Vec::new(),
            };
            g.grow(rows, &mut rng);
            ClassificationTree { nodes: g.nodes }
        })
        .collect();
    Ok(ForestModel {
        n_classes,
        trees,
        params: params.clone(),
        feature_names: x.names().to_vec(),
    })
}

pub fn predict_proba_forest(model: &ForestModel, x: &FeatureMatrix) -> Result<ProbabilityMatrix, LearnerError> {
    check_schema(&model.feature_names, x)?;
    let k = model.n_classes;
    let t = model.trees.len() as f64;
    let mut data = vec![0.0; x.n_rows() * k];
    data.par_chunks_mut(k).enumerate().for_each(|(i, out)| {
        let row = x.row(i);
        for tree in &model.trees {
            let counts = tree.leaf(row);
            let total: u32 = counts.iter().sum();
            for (o, &c) in out.iter_mut().zip(counts) {
                *o += f64::from(c) / f64::from(total);
            }
        }
        out.iter_mut().for_each(|o| *o /= t);
    });
    Ok(ProbabilityMatrix::new(k, data))
}
