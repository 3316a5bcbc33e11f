use serde::{Deserialize, Serialize};

use super::ValidationError;

/// Micro-averaged precision, recall and F1 with the confusion matrix
/// (`confusion[truth][predicted]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
    pub per_fold_f1: Vec<f64>,
}

/// Pools true positives, false positives and false negatives over classes.
/// For single-label predictions every off-diagonal count is both a false
/// positive and a false negative, so P = R = F1 = accuracy.
pub fn classification_metrics(
    predicted: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<MetricsReport, ValidationError> {
    if predicted.len() != truth.len() {
        return Err(ValidationError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(ValidationError::Empty);
    }
    let n_classes = predicted
        .iter()
        .chain(truth)
        .max()
        .map_or(n_classes, |&m| n_classes.max(m + 1));
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for k in 0..n_classes {
        tp += confusion[k][k];
        fp += (0..n_classes).filter(|&t| t != k).map(|t| confusion[t][k]).sum::<usize>();
        fnn += (0..n_classes).filter(|&p| p != k).map(|p| confusion[k][p]).sum::<usize>();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fnn);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let accuracy = ratio(tp, truth.len());
    debug_assert_eq!(fp, fnn);
    debug_assert_eq!(precision, accuracy);
    Ok(MetricsReport {
        micro_precision: precision,
        micro_recall: recall,
        micro_f1: f1,
        accuracy,
        confusion,
        per_fold_f1: Vec::new(),
    })
}

/// Micro F1 of argmax predictions; the hot path of the blend optimiser.
pub(crate) fn micro_f1(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let m = classification_metrics(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!((m.micro_precision, m.micro_recall, m.micro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_counted_two_thirds() {
        // A=0, B=1: pred [A,B,A], truth [A,B,B]
        let m = classification_metrics(&[0, 1, 0], &[0, 1, 1], 2).unwrap();
        assert_eq!(m.confusion, vec![vec![1, 0], vec![1, 1]]);
        assert!((m.micro_f1 - 2.0 / 3.0).abs() < 1e-15);
        let (p, r) = (m.micro_precision, m.micro_recall);
        assert!((m.micro_f1 - 2.0 * p * r / (p + r)).abs() < 1e-15);
    }

    #[test]
    fn all_wrong_is_zero() {
        let m = classification_metrics(&[1, 0], &[0, 1], 2).unwrap();
        assert_eq!(m.micro_f1, 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(classification_metrics(&[1], &[0, 1], 2).is_err());
        assert_eq!(classification_metrics(&[], &[], 2), Err(ValidationError::Empty));
    }
}
