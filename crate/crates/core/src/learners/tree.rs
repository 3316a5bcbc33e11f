use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FeatureBins;
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf { value: f64 },
}

/// Regression tree whose leaves hold additive score updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right } as usize,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Binned, column-major copy of a training matrix.
#[derive(Debug, Clone)]
pub(crate) struct BinnedData {
    pub bins: Vec<FeatureBins>,
    pub cols: Vec<Vec<u8>>,
    offsets: Vec<usize>,
}

impl BinnedData {
    pub fn new(x: &FeatureMatrix, max_bins: usize) -> BinnedData {
        let bins: Vec<FeatureBins> = (0..x.n_cols())
            .into_par_iter()
            .map(|j| FeatureBins::fit(&x.column(j), max_bins))
            .collect();
        let cols = bins
            .par_iter()
            .enumerate()
            .map(|(j, b)| (0..x.n_rows()).map(|i| b.bin_of(x.get(i, j)) as u8).collect())
            .collect();
        let mut offsets = Vec::with_capacity(bins.len() + 1);
        offsets.push(0);
        for b in &bins {
            offsets.push(offsets.last().unwrap() + b.n_bins());
        }
        BinnedData {
            bins,
            cols,
            offsets,
        }
    }

    fn total_bins(&self) -> usize {
        *self.offsets.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct BinStat {
    g: f64,
    h: f64,
    n: u32,
}

#[derive(Debug, Clone)]
struct Histogram {
    stats: Vec<BinStat>,
}

impl Histogram {
    fn build(data: &BinnedData, rows: &[u32], grad: &[f64], hess: &[f64]) -> Histogram {
        let mut stats = vec![BinStat::default(); data.total_bins()];
        let fill = |(f, slot): (usize, &mut [BinStat])| {
            let col = &data.cols[f];
            for &r in rows {
                let r = r as usize;
                let s = &mut slot[col[r] as usize];
                s.g += grad[r];
                s.h += hess[r];
                s.n += 1;
            }
        };
        let slices = split_by_offsets(&mut stats, &data.offsets);
        if rows.len() * data.cols.len() > 50_000 {
            slices.into_par_iter().enumerate().for_each(fill);
        } else {
            slices.into_iter().enumerate().for_each(fill);
        }
        Histogram { stats }
    }

    fn subtract(&self, other: &Histogram) -> Histogram {
        Histogram {
            stats: self
                .stats
                .iter()
                .zip(&other.stats)
                .map(|(a, b)| BinStat {
                    g: a.g - b.g,
                    h: a.h - b.h,
                    n: a.n - b.n,
                })
                .collect(),
        }
    }
}

fn split_by_offsets<'a>(stats: &'a mut [BinStat], offsets: &[usize]) -> Vec<&'a mut [BinStat]> {
    let mut out = Vec::with_capacity(offsets.len() - 1);
    let mut rest = stats;
    for w in offsets.windows(2) {
        let (head, tail) = rest.split_at_mut(w[1] - w[0]);
        out.push(head);
        rest = tail;
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    pub learning_rate: f64,
}

/// A chosen split: rows whose bin is `<= bin` (raw value `<= threshold`)
/// go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub bin: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn score(g: f64, h: f64, l2: f64) -> f64 {
    g * g / (h + l2)
}

fn best_split(data: &BinnedData, hist: &Histogram, params: &TreeParams) -> Option<SplitChoice> {
    let min = params.min_samples_leaf as u32;
    let mut best: Option<SplitChoice> = None;
    for f in 0..data.cols.len() {
        let slot = &hist.stats[data.offsets[f]..data.offsets[f + 1]];
        let total = slot.iter().fold(BinStat::default(), |a, b| BinStat {
            g: a.g + b.g,
            h: a.h + b.h,
            n: a.n + b.n,
        });
        let parent = score(total.g, total.h, params.l2);
        let mut left = BinStat::default();
        for b in 0..slot.len().saturating_sub(1) {
            left.g += slot[b].g;
            left.h += slot[b].h;
            left.n += slot[b].n;
            let right_n = total.n - left.n;
            if left.n < min || right_n < min {
                continue;
            }
            if slot[b].n == 0 {
                continue;
            }
            let gain = score(left.g, left.h, params.l2)
                + score(total.g - left.g, total.h - left.h, params.l2)
                - parent;
            if gain < 0.0 || !gain.is_finite() {
                continue;
            }
            if best.map_or(true, |s| gain > s.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    bin: b,
                    threshold: data.bins[f].upper[b],
                    gain,
                });
            }
        }
    }
    best
}

struct Leaf {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    g: f64,
    h: f64,
    best: Option<SplitChoice>,
}

/// Grows one tree leaf-wise on gradient statistics. Returns the tree and,
/// for every leaf, the training rows it holds with its value.
pub(crate) fn grow_tree(
    data: &BinnedData,
    grad: &[f64],
    hess: &[f64],
    params: &TreeParams,
) -> (RegressionTree, Vec<(Vec<u32>, f64)>) {
    let rows: Vec<u32> = (0..grad.len() as u32).collect();
    let hist = Histogram::build(data, &rows, grad, hess);
    let best = (params.max_leaves > 1).then(|| best_split(data, &hist, params)).flatten();
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut leaves = vec![Leaf {
        node: 0,
        g: grad.iter().sum(),
        h: hess.iter().sum(),
        rows,
        hist,
        best,
    }];

    while leaves.len() < params.max_leaves {
        let mut pick: Option<usize> = None;
        for (i, l) in leaves.iter().enumerate() {
            if let Some(s) = l.best {
                if pick.map_or(true, |p| s.gain > leaves[p].best.unwrap().gain) {
                    pick = Some(i);
                }
            }
        }
        let Some(i) = pick else { break };
        let leaf = leaves.remove(i);
        let split = leaf.best.expect("picked leaves have a split");
        let col = &data.cols[split.feature];
        let (lrows, rrows): (Vec<u32>, Vec<u32>) = leaf
            .rows
            .iter()
            .partition(|&&r| usize::from(col[r as usize]) <= split.bin);
        let (lhist, rhist) = if lrows.len() <= rrows.len() {
            let l = Histogram::build(data, &lrows, grad, hess);
            let r = leaf.hist.subtract(&l);
            (l, r)
        } else {
            let r = Histogram::build(data, &rrows, grad, hess);
            let l = leaf.hist.subtract(&r);
            (l, r)
        };
        let left_id = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[leaf.node] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_id as u32,
            right: left_id as u32 + 1,
        };
        for (node, rows, hist) in [(left_id, lrows, lhist), (left_id + 1, rrows, rhist)] {
            let g = rows.iter().map(|&r| grad[r as usize]).sum();
            let h = rows.iter().map(|&r| hess[r as usize]).sum();
            let best = best_split(data, &hist, params);
            leaves.push(Leaf {
                node,
                rows,
                hist,
                g,
                h,
                best,
            });
        }
    }

    let mut assignments = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let value = -params.learning_rate * leaf.g / (leaf.h + params.l2);
        nodes[leaf.node] = TreeNode::Leaf { value };
        assignments.push((leaf.rows, value));
    }
    (RegressionTree { nodes }, assignments)
}

/// Root split the histogram learner would choose for the given gradient
/// statistics.
pub fn best_root_split(
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    max_bins: usize,
    min_samples_leaf: usize,
    l2: f64,
) -> Option<SplitChoice> {
    let data = BinnedData::new(x, max_bins);
    let rows: Vec<u32> = (0..x.n_rows() as u32).collect();
    let hist = Histogram::build(&data, &rows, grad, hess);
    best_split(
        &data,
        &hist,
        &TreeParams {
            max_leaves: 2,
            min_samples_leaf,
            l2,
            learning_rate: 1.0,
        },
    )
}
