use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, BinnedData, TreeParams};
use super::{check_schema, check_training_input, log_loss, LearnerError, ProbabilityMatrix, RegressionTree};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub max_bins: usize,
    pub l2: f64,
    /// Rounds without validation improvement before stopping; only used
    /// when a validation split is supplied.
    pub early_stopping_patience: usize,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 300,
            learning_rate: 0.05,
            max_leaves: 31,
            min_samples_leaf: 20,
            max_bins: 256,
            l2: 1.0,
            early_stopping_patience: 30,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::Parameter(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.max_leaves < 1 {
            return bad("max_leaves must be >= 1");
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be >= 1");
        }
        if !(2..=256).contains(&self.max_bins) {
            return bad("max_bins must lie in [2, 256]");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be finite and >= 0");
        }
        if self.early_stopping_patience < 1 {
            return bad("early_stopping_patience must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
}

/// Softmax gradient-boosted trees: one regression tree per present class per
/// round, added to `ln(prior)` initial scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_classes: usize,
    /// `ln(prior)` per class; `None` for classes absent from training.
    pub log_prior: Vec<Option<f64>>,
    /// `rounds[r][k]` is the tree of class `k` in round `r`.
    pub rounds: Vec<Vec<Option<RegressionTree>>>,
    pub params: GbdtParams,
    pub feature_names: Vec<String>,
    /// Training loss before any round.
    pub initial_loss: f64,
    pub history: Vec<RoundLog>,
    pub diagnostics: Vec<String>,
}

impl GbdtModel {
    fn raw_scores(&self, row: &[f64], out: &mut [f64]) {
        for (k, s) in out.iter_mut().enumerate() {
            *s = self.log_prior[k].unwrap_or(f64::NEG_INFINITY);
        }
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                if let Some(t) = tree {
                    out[k] += t.predict(row);
                }
            }
        }
    }
}

/// In-place softmax; `-inf` scores get probability 0.
pub(crate) fn softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = if s.is_finite() { (*s - max).exp() } else { 0.0 };
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Gradient of `-ln softmax(scores)[label]` with respect to each score:
/// `softmax(scores) - onehot(label)`.
pub fn softmax_gradient(scores: &[f64], label: usize) -> Vec<f64> {
    let mut p = scores.to_vec();
    softmax(&mut p);
    p[label] -= 1.0;
    p
}

fn probabilities(scores: &[f64], n_classes: usize) -> ProbabilityMatrix {
    let mut data = scores.to_vec();
    data.par_chunks_mut(n_classes).for_each(softmax);
    ProbabilityMatrix::new(n_classes, data)
}

pub fn fit_gbdt(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    params: &GbdtParams,
    validation: Option<(&FeatureMatrix, &[usize])>,
) -> Result<GbdtModel, LearnerError> {
    params.validate()?;
    check_training_input(x, y, n_classes)?;
    if let Some((vx, vy)) = validation {
        check_training_input(vx, vy, n_classes)?;
        check_schema(x.names(), vx)?;
    }
    let n = y.len();
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let log_prior: Vec<Option<f64>> = counts
        .iter()
        .map(|&c| (c > 0).then(|| (c as f64 / n as f64).ln()))
        .collect();
    let present: Vec<usize> = (0..n_classes).filter(|&k| counts[k] > 0).collect();

    let init: Vec<f64> = log_prior.iter().map(|p| p.unwrap_or(f64::NEG_INFINITY)).collect();
    let mut scores: Vec<f64> = init.iter().copied().cycle().take(n * n_classes).collect();
    let mut prob = probabilities(&scores, n_classes);
    let initial_loss = log_loss(&prob, y);

    let mut model = GbdtModel {
        n_classes,
        log_prior,
        rounds: Vec::new(),
        params: params.clone(),
        feature_names: x.names().to_vec(),
        initial_loss,
        history: Vec::new(),
        diagnostics: Vec::new(),
    };
    if present.len() < 2 {
        model
            .diagnostics
            .push("single class in training labels; model holds initial scores only".into());
        return Ok(model);
    }

    let data = BinnedData::new(x, params.max_bins);
    let tree_params = TreeParams {
        max_leaves: params.max_leaves,
        min_samples_leaf: params.min_samples_leaf,
        l2: params.l2,
        learning_rate: params.learning_rate,
    };
    let mut valid_scores: Option<Vec<f64>> = validation.map(|(vx, _)| {
        init.iter().copied().cycle().take(vx.n_rows() * n_classes).collect()
    });
    let mut best_valid = (f64::INFINITY, 0usize);

    for round in 0..params.rounds {
        let trees: Vec<(usize, RegressionTree, Vec<(Vec<u32>, f64)>)> = present
            .par_iter()
            .map(|&k| {
                let mut grad = Vec::with_capacity(n);
                let mut hess = Vec::with_capacity(n);
                for i in 0..n {
                    let p = prob.row(i)[k];
                    grad.push(p - f64::from(u8::from(y[i] == k)));
                    hess.push((p * (1.0 - p)).max(1e-16));
                }
                let (tree, leaves) = grow_tree(&data, &grad, &hess, &tree_params);
                (k, tree, leaves)
            })
            .collect();

        let mut round_trees: Vec<Option<RegressionTree>> = vec![None; n_classes];
        for (k, tree, leaves) in trees {
            for (rows, value) in leaves {
                for r in rows {
                    scores[r as usize * n_classes + k] += value;
                }
            }
            if let (Some(vs), Some((vx, _))) = (valid_scores.as_mut(), validation) {
                for i in 0..vx.n_rows() {
                    vs[i * n_classes + k] += tree.predict(vx.row(i));
                }
            }
            round_trees[k] = Some(tree);
        }
        model.rounds.push(round_trees);
        prob = probabilities(&scores, n_classes);
        let train_loss = log_loss(&prob, y);
        let valid_loss = match (&valid_scores, validation) {
            (Some(vs), Some((_, vy))) => Some(log_loss(&probabilities(vs, n_classes), vy)),
            _ => None,
        };
        model.history.push(RoundLog {
            train_loss,
            valid_loss,
        });
        if let Some(v) = valid_loss {
            if v < best_valid.0 {
                best_valid = (v, round + 1);
            } else if round + 1 - best_valid.1 >= params.early_stopping_patience {
                break;
            }
        }
    }
    if validation.is_some() && best_valid.1 < model.rounds.len() {
        model.diagnostics.push(format!(
            "early stopping: kept {} of {} rounds",
            best_valid.1,
            model.rounds.len()
        ));
        model.rounds.truncate(best_valid.1);
        model.history.truncate(best_valid.1);
    }
    Ok(model)
}

pub fn predict_proba_gbdt(model: &GbdtModel, x: &FeatureMatrix) -> Result<ProbabilityMatrix, LearnerError> {
    check_schema(&model.feature_names, x)?;
    let k = model.n_classes;
    let mut data = vec![0.0; x.n_rows() * k];
    data.par_chunks_mut(k).enumerate().for_each(|(i, out)| {
        model.raw_scores(x.row(i), out);
        softmax(out);
    });
    Ok(ProbabilityMatrix::new(k, data))
}
