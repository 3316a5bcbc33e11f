//! Convex blending of out-of-fold probability matrices.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::ProbabilityMatrix;
use crate::validation::micro_f1;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },
    #[error("weights csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for EnsembleError {
    fn from(e: csv::Error) -> Self {
        EnsembleError::Csv(e.to_string())
    }
}

/// Default step schedule of the weight search.
pub const DEFAULT_STEPS: [f64; 5] = [0.5, 0.25, 0.1, 0.05, 0.01];

/// Lattice resolution per model: steps must be multiples of `1 / RESOLUTION`.
const RESOLUTION: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub model_ids: Vec<String>,
    pub weights: Vec<f64>,
    /// Micro-F1 of the blended argmax on the optimisation data.
    pub objective: f64,
}

fn check_shapes(mats: &[ProbabilityMatrix]) -> Result<(), EnsembleError> {
    let first = mats
        .first()
        .ok_or_else(|| EnsembleError::Parameter("no models to blend".into()))?;
    for m in &mats[1..] {
        if m.n_rows() != first.n_rows() || m.n_classes() != first.n_classes() {
            return Err(EnsembleError::Dimension {
                expected: format!("{}x{}", first.n_rows(), first.n_classes()),
                found: format!("{}x{}", m.n_rows(), m.n_classes()),
            });
        }
    }
    Ok(())
}

/// Each entry's weighted terms are summed in ascending order, so the result
/// does not depend on the order of the models.
fn blend_unchecked(mats: &[ProbabilityMatrix], weights: &[f64]) -> ProbabilityMatrix {
    let mut out = ProbabilityMatrix::zeros(mats[0].n_rows(), mats[0].n_classes());
    let mut terms = vec![0.0; mats.len()];
    for (e, o) in out.data_mut().iter_mut().enumerate() {
        for (t, (m, &w)) in terms.iter_mut().zip(mats.iter().zip(weights)) {
            *t = w * m.data()[e];
        }
        terms.sort_by(f64::total_cmp);
        *o = terms.iter().sum();
    }
    out
}

/// `Σ wᵢ Pᵢ`.
pub fn blend(mats: &[ProbabilityMatrix], weights: &[f64]) -> Result<ProbabilityMatrix, EnsembleError> {
    check_shapes(mats)?;
    if weights.len() != mats.len() {
        return Err(EnsembleError::Dimension {
            expected: format!("{} weights", mats.len()),
            found: format!("{} weights", weights.len()),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(EnsembleError::Parameter("weights must lie on the simplex".into()));
    }
    Ok(blend_unchecked(mats, weights))
}

/// Element-wise mean; identical to `blend` with uniform weights.
pub fn mean_blend(mats: &[ProbabilityMatrix]) -> Result<ProbabilityMatrix, EnsembleError> {
    check_shapes(mats)?;
    let w = vec![1.0 / mats.len() as f64; mats.len()];
    Ok(blend_unchecked(mats, &w))
}

/// Micro-F1 of the argmax of `probs` against `truth`.
pub fn blended_f1(probs: &ProbabilityMatrix, truth: &[usize]) -> f64 {
    micro_f1(&probs.predicted_classes(), truth)
}

/// Steps must be nonempty, lie in (0, 1] and be multiples of 0.0001.
pub fn validate_steps(steps: &[f64]) -> Result<(), EnsembleError> {
    if steps.is_empty() {
        return Err(EnsembleError::Parameter("step schedule is empty".into()));
    }
    for &s in steps {
        let units = s * RESOLUTION as f64;
        if !(s > 0.0 && s <= 1.0) || (units - units.round()).abs() > 1e-6 {
            return Err(EnsembleError::Parameter(format!(
                "step {s} must lie in (0, 1] and be a multiple of {}",
                1.0 / RESOLUTION as f64
            )));
        }
    }
    Ok(())
}

struct Search<'a> {
    mats: &'a [ProbabilityMatrix],
    truth: &'a [usize],
    total: u64,
}

impl Search<'_> {
    fn weights(&self, units: &[u64]) -> Vec<f64> {
        units.iter().map(|&u| u as f64 / self.total as f64).collect()
    }

    fn objective(&self, units: &[u64]) -> f64 {
        blended_f1(&blend_unchecked(self.mats, &self.weights(units)), self.truth)
    }

    /// Coordinate ascent from `start`; returns the final point and its score.
    fn ascend(&self, start: Vec<u64>, steps: &[u64], rng: &mut ChaCha8Rng) -> (Vec<u64>, f64) {
        let m = start.len();
        let mut current = start;
        let mut score = self.objective(&current);
        for &step in steps {
            loop {
                let moves: Vec<(usize, usize, u64)> = (0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .filter(|&(i, j)| i != j && current[i] > 0)
                    .map(|(i, j)| (i, j, step.min(current[i])))
                    .collect();
                let scores: Vec<f64> = moves
                    .par_iter()
                    .map(|&(i, j, d)| {
                        let mut u = current.clone();
                        u[i] -= d;
                        u[j] += d;
                        self.objective(&u)
                    })
                    .collect();
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !(best > score) {
                    break;
                }
                let tied: Vec<usize> = (0..moves.len()).filter(|&c| scores[c] == best).collect();
                let (i, j, d) = moves[*tied.choose(rng).expect("at least one best move")];
                current[i] -= d;
                current[j] += d;
                score = best;
            }
        }
        (current, score)
    }
}

/// Coordinate ascent on the weight simplex maximising blended micro-F1,
/// restarted from the uniform point and from every corner. Moves transfer
/// one step of mass between an ordered model pair and are accepted only on
/// strict improvement; the seed only breaks ties between equally good moves.
/// The best restart wins, ties going to the earlier restart.
///
/// The search runs over the models sorted by id (corners are visited in that
/// order), so permuting the input permutes the weights and nothing else.
pub fn optimize_weights(
    model_ids: &[String],
    mats: &[ProbabilityMatrix],
    truth: &[usize],
    steps: &[f64],
    seed: u64,
) -> Result<EnsembleWeights, EnsembleError> {
    check_shapes(mats)?;
    if model_ids.len() != mats.len() {
        return Err(EnsembleError::Dimension {
            expected: format!("{} model ids", mats.len()),
            found: format!("{} model ids", model_ids.len()),
        });
    }
    if truth.len() != mats[0].n_rows() {
        return Err(EnsembleError::Dimension {
            expected: format!("{} labels", mats[0].n_rows()),
            found: format!("{} labels", truth.len()),
        });
    }
    validate_steps(steps)?;
    let mut order: Vec<usize> = (0..mats.len()).collect();
    order.sort_by(|&a, &b| model_ids[a].cmp(&model_ids[b]));
    if let Some(w) = order.windows(2).find(|w| model_ids[w[0]] == model_ids[w[1]]) {
        return Err(EnsembleError::Parameter(format!("duplicate model id `{}`", model_ids[w[0]])));
    }
    let sorted: Vec<ProbabilityMatrix> = order.iter().map(|&i| mats[i].clone()).collect();

    let total = RESOLUTION * mats.len() as u64;
    let lattice: Vec<u64> = steps.iter().map(|s| (s * total as f64).round() as u64).collect();
    let search = Search {
        mats: &sorted,
        truth,
        total,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut starts = vec![vec![RESOLUTION; mats.len()]];
    if mats.len() > 1 {
        for c in 0..mats.len() {
            let mut u = vec![0; mats.len()];
            u[c] = total;
            starts.push(u);
        }
    }
    let mut best: Option<(Vec<u64>, f64)> = None;
    for start in starts {
        let (units, score) = search.ascend(start, &lattice, &mut rng);
        if best.as_ref().map_or(true, |(_, s)| score > *s) {
            best = Some((units, score));
        }
    }
    let (units, objective) = best.expect("at least one restart");
    let sorted_weights = search.weights(&units);
    let mut weights = vec![0.0; mats.len()];
    for (pos, &i) in order.iter().enumerate() {
        weights[i] = sorted_weights[pos];
    }
    Ok(EnsembleWeights {
        model_ids: model_ids.to_vec(),
        weights,
        objective,
    })
}

/// Columns `model_id,weight`.
pub fn write_weights_csv<W: Write>(weights: &EnsembleWeights, sink: W) -> Result<(), EnsembleError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["model_id", "weight"])?;
    for (id, v) in weights.model_ids.iter().zip(&weights.weights) {
        w.write_record([id.clone(), v.to_string()])?;
    }
    w.flush().map_err(|e| EnsembleError::Csv(e.to_string()))
}

/// Reads weights back; the objective is not stored and comes back as NaN.
pub fn read_weights_csv<R: Read>(source: R) -> Result<EnsembleWeights, EnsembleError> {
    let mut r = csv::Reader::from_reader(source);
    if r.headers()?.iter().collect::<Vec<_>>() != ["model_id", "weight"] {
        return Err(EnsembleError::Csv("expected header model_id,weight".into()));
    }
    let (mut ids, mut weights) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        weights.push(
            rec[1]
                .parse::<f64>()
                .map_err(|_| EnsembleError::Csv(format!("bad weight for {}", &rec[0])))?,
        );
    }
    Ok(EnsembleWeights {
        model_ids: ids,
        weights,
        objective: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("m{i}")).collect()
    }

    fn onehot(classes: &[usize], k: usize) -> ProbabilityMatrix {
        let rows: Vec<Vec<f64>> = classes
            .iter()
            .map(|&c| (0..k).map(|j| f64::from(u8::from(j == c))).collect())
            .collect();
        ProbabilityMatrix::from_rows(&rows)
    }

    #[test]
    fn mean_examples() {
        let a = ProbabilityMatrix::from_rows(&[vec![1.0, 0.0]]);
        let b = ProbabilityMatrix::from_rows(&[vec![0.0, 1.0]]);
        assert_eq!(mean_blend(&[a.clone(), b.clone()]).unwrap().row(0), [0.5, 0.5]);
        assert_eq!(mean_blend(&[a.clone(), a.clone()]).unwrap(), a);
        assert_eq!(mean_blend(&[a.clone()]).unwrap(), a);
        assert_eq!(blend(&[a.clone(), b.clone()], &[1.0, 0.0]).unwrap(), a);
        assert!(mean_blend(&[a, ProbabilityMatrix::zeros(2, 2)]).is_err());
    }

    #[test]
    fn single_model() {
        let p = onehot(&[0, 1, 1], 2);
        let w = optimize_weights(&ids(1), &[p], &[0, 1, 0], &DEFAULT_STEPS, 0).unwrap();
        assert_eq!(w.weights, [1.0]);
        assert!((w.objective - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_beats_adversarial() {
        let truth: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let wrong: Vec<usize> = truth.iter().map(|c| (c + 1) % 4).collect();
        let w = optimize_weights(&ids(2), &[onehot(&truth, 4), onehot(&wrong, 4)], &truth, &DEFAULT_STEPS, 3).unwrap();
        assert_eq!(w.objective, 1.0);
        assert!(w.weights[0] >= 0.9);
    }

    #[test]
    fn identical_models_keep_uniform() {
        let p = onehot(&[0, 1, 2, 2], 3);
        let w = optimize_weights(&ids(3), &[p.clone(), p.clone(), p], &[0, 1, 2, 0], &DEFAULT_STEPS, 1).unwrap();
        assert_eq!(w.objective, 0.75);
        for x in &w.weights {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(optimize_weights(&[], &[], &[], &DEFAULT_STEPS, 0).is_err());
        let p = onehot(&[0], 2);
        assert!(optimize_weights(&ids(1), &[p.clone()], &[0], &[0.00001], 0).is_err());
        assert!(optimize_weights(&ids(1), &[p.clone()], &[0, 1], &DEFAULT_STEPS, 0).is_err());
        let same = vec!["a".to_string(), "a".to_string()];
        assert!(optimize_weights(&same, &[p.clone(), p], &[0], &DEFAULT_STEPS, 0).is_err());
    }

    #[test]
    fn weights_csv_round_trip() {
        let w = EnsembleWeights {
            model_ids: ids(2),
            weights: vec![0.3, 0.7],
            objective: 0.5,
        };
        let mut buf = Vec::new();
        write_weights_csv(&w, &mut buf).unwrap();
        let back = read_weights_csv(buf.as_slice()).unwrap();
        assert_eq!((back.model_ids, back.weights), (w.model_ids, w.weights));
    }
}
