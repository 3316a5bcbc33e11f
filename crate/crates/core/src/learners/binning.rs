use serde::{Deserialize, Serialize};

/// Histogram bins of one feature. Bin `b` holds values in
/// `(upper[b-1], upper[b]]`; values equal to an edge fall in the lower bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub upper: Vec<f64>,
}

impl FeatureBins {
    /// Equal-frequency edges from training values. With at most `max_bins`
    /// distinct values every value gets its own bin.
    pub fn fit(values: &[f64], max_bins: usize) -> FeatureBins {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() <= max_bins {
            return FeatureBins { upper: distinct };
        }
        let n = sorted.len();
        let mut upper: Vec<f64> = (1..=max_bins)
            .map(|b| sorted[(b * n / max_bins).max(1) - 1])
            .collect();
        upper.dedup();
        FeatureBins { upper }
    }

    pub fn n_bins(&self) -> usize {
        self.upper.len()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        self.upper
            .partition_point(|&u| u < x)
            .min(self.upper.len().saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_distinct_values_get_own_bins() {
        let b = FeatureBins::fit(&[3.0, 1.0, 2.0, 2.0, 1.0], 256);
        assert_eq!(b.upper, [1.0, 2.0, 3.0]);
        assert_eq!(b.bin_of(1.0), 0);
        assert_eq!(b.bin_of(1.5), 1);
        assert_eq!(b.bin_of(2.0), 1);
        assert_eq!(b.bin_of(99.0), 2);
    }

    #[test]
    fn equal_frequency_edges() {
        let vals: Vec<f64> = (0..1000).map(f64::from).collect();
        let b = FeatureBins::fit(&vals, 4);
        assert_eq!(b.upper, [249.0, 499.0, 749.0, 999.0]);
        let mut counts = [0usize; 4];
        for v in &vals {
            counts[b.bin_of(*v)] += 1;
        }
        assert_eq!(counts, [250; 4]);
    }

    #[test]
    fn ties_go_to_lower_bin() {
        let vals = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let b = FeatureBins::fit(&vals, 3);
        assert!(b.n_bins() <= 4);
        assert_eq!(b.bin_of(1.0), 0);
    }
}
