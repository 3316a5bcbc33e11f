use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{epoch_seconds, FeatureError, FeaturePipelineModel};
use crate::dataset::{ObservationRecord, ObservationTable};

const LEAF_SIZE: usize = 16;

/// Standardises (latitude, longitude, epoch seconds, UTC offset) so that the
/// four coordinates are comparable under a Euclidean metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnScaler {
    pub mean: [f64; 4],
    pub std: [f64; 4],
    /// Used for a missing UTC offset.
    pub tz_impute: f64,
}

impl KnnScaler {
    /// Takes means and deviations from the fitted pipeline where it has them,
    /// otherwise from the raw present values of `table`.
    pub fn from_pipeline(model: &FeaturePipelineModel, table: &ObservationTable) -> Self {
        let names = ["latitude", "longitude", "epoch_seconds", "time_zone"];
        let mut mean = [0.0; 4];
        let mut std = [1.0; 4];
        let mut tz_impute = 0.0;
        for (k, name) in names.iter().enumerate() {
            let (m, s, med) = match model.numeric_column(name) {
                Some(c) => (c.mean, c.std, c.impute),
                None => {
                    let vals: Vec<f64> = table.records().iter().filter_map(|r| raw(r, k)).collect();
                    raw_stats(&vals)
                }
            };
            mean[k] = m;
            std[k] = if s > 0.0 && s.is_finite() { s } else { 1.0 };
            if k == 3 {
                tz_impute = med;
            }
        }
        KnnScaler {
            mean,
            std,
            tz_impute,
        }
    }

    /// `None` when latitude, longitude or time is missing.
    pub fn point(&self, r: &ObservationRecord) -> Option<[f64; 4]> {
        let raw = [
            r.latitude?,
            r.longitude?,
            epoch_seconds(&r.time?, r.time_zone),
            r.time_zone.unwrap_or(self.tz_impute),
        ];
        let mut p = [0.0; 4];
        for k in 0..4 {
            p[k] = (raw[k] - self.mean[k]) / self.std[k];
        }
        Some(p)
    }
}

fn raw(r: &ObservationRecord, k: usize) -> Option<f64> {
    match k {
        0 => r.latitude,
        1 => r.longitude,
        2 => r.time.map(|t| epoch_seconds(&t, r.time_zone)),
        _ => r.time_zone,
    }
}

fn raw_stats(vals: &[f64]) -> (f64, f64, f64) {
    if vals.is_empty() {
        return (0.0, 1.0, 0.0);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    (mean, std, super::pipeline::quantile_sorted(&sorted, 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMode {
    /// Neighbours must lie in a different fold from the query row.
    OutOfFold,
    /// Any other row is eligible.
    All,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Exact k-nearest-neighbour index (squared Euclidean distance, ties broken
/// by smaller row index) backed by a k-d tree.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    dim: usize,
    /// Row-major coordinates of the indexed points.
    points: Vec<f64>,
    /// Table row of each indexed point, ascending.
    rows: Vec<usize>,
    point_of_row: Vec<Option<usize>>,
    folds: Option<Vec<usize>>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist: f64,
    row: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.row.cmp(&other.row))
    }
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

impl NeighborIndex {
    /// Indexes `points` (one per table row; `None` rows are left out).
    /// `folds`, when given, has one label per table row.
    pub fn new(
        dim: usize,
        points: Vec<Option<Vec<f64>>>,
        folds: Option<Vec<usize>>,
    ) -> Result<Self, FeatureError> {
        if let Some(f) = &folds {
            if f.len() != points.len() {
                return Err(FeatureError::Parameter(format!(
                    "{} fold labels for {} rows",
                    f.len(),
                    points.len()
                )));
            }
        }
        let mut flat = Vec::new();
        let mut rows = Vec::new();
        let mut point_of_row = vec![None; points.len()];
        for (row, p) in points.into_iter().enumerate() {
            if let Some(p) = p {
                if p.len() != dim || p.iter().any(|v| !v.is_finite()) {
                    return Err(FeatureError::Parameter(format!(
                        "row {row}: expected {dim} finite coordinates"
                    )));
                }
                point_of_row[row] = Some(rows.len());
                rows.push(row);
                flat.extend(p);
            }
        }
        if rows.len() < 2 {
            return Err(FeatureError::InsufficientData(rows.len()));
        }
        let mut index = NeighborIndex {
            dim,
            points: flat,
            perm: (0..rows.len()).collect(),
            rows,
            point_of_row,
            folds,
            nodes: Vec::new(),
        };
        let n = index.rows.len();
        index.build(0, n);
        Ok(index)
    }

    fn coord(&self, p: usize, axis: usize) -> f64 {
        self.points[p * self.dim + axis]
    }

    fn point(&self, p: usize) -> &[f64] {
        &self.points[p * self.dim..(p + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = (0..self.dim)
            .max_by(|&a, &b| {
                let spread = |ax| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &p in &self.perm[start..end] {
                        let v = self.coord(p, ax);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    hi - lo
                };
                spread(a).total_cmp(&spread(b)).then(b.cmp(&a))
            })
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let (points, dim) = (&self.points, self.dim);
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + axis]
                .total_cmp(&points[b * dim + axis])
                .then(a.cmp(&b))
        });
        let value = self.coord(self.perm[mid], axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of table rows the index was built from, indexed or not.
    pub fn table_rows(&self) -> usize {
        self.point_of_row.len()
    }

    /// Table rows left out for lacking coordinates.
    pub fn excluded_rows(&self) -> Vec<usize> {
        (0..self.point_of_row.len())
            .filter(|&r| self.point_of_row[r].is_none())
            .collect()
    }

    pub fn fold_of(&self, row: usize) -> Option<usize> {
        self.folds.as_ref().map(|f| f[row])
    }

    pub fn coordinates_of(&self, row: usize) -> Option<&[f64]> {
        self.point_of_row[row].map(|p| self.point(p))
    }

    /// Up to `k` nearest indexed rows satisfying `eligible`, as
    /// `(table row, squared distance)` sorted by distance then row.
    pub fn query<F: Fn(usize) -> bool>(&self, q: &[f64], k: usize, eligible: F) -> Vec<(usize, f64)> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 {
            self.search(0, q, k, &eligible, &mut heap);
        }
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.row, c.dist)).collect()
    }

    fn search<F: Fn(usize) -> bool>(
        &self,
        node: usize,
        q: &[f64],
        k: usize,
        eligible: &F,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.perm[start..end] {
                    let row = self.rows[p];
                    if !eligible(row) {
                        continue;
                    }
                    let c = Candidate {
                        dist: sq_dist(q, self.point(p)),
                        row,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, eligible, heap);
                let bound = diff * diff;
                if heap.len() < k || bound <= heap.peek().expect("heap is full").dist {
                    self.search(far, q, k, eligible, heap);
                }
            }
        }
    }

    /// Neighbours of an indexed table row, excluding the row itself and, in
    /// out-of-fold mode, every row of its fold.
    pub fn neighbors_of_row(
        &self,
        row: usize,
        k: usize,
        mode: NeighborMode,
    ) -> Result<Vec<(usize, f64)>, FeatureError> {
        let q = self
            .coordinates_of(row)
            .ok_or_else(|| FeatureError::Parameter(format!("row {row} is not indexed")))?;
        let folds = self.mode_folds(mode)?;
        Ok(self.query(q, k, |r| r != row && folds.map_or(true, |f| f[r] != f[row])))
    }

    fn mode_folds(&self, mode: NeighborMode) -> Result<Option<&[usize]>, FeatureError> {
        match mode {
            NeighborMode::All => Ok(None),
            NeighborMode::OutOfFold => self
                .folds
                .as_deref()
                .map(Some)
                .ok_or_else(|| FeatureError::Parameter("out-of-fold mode needs fold labels".into())),
        }
    }
}

/// Indexes the standardised (latitude, longitude, epoch time, UTC offset)
/// of every row that has latitude, longitude and time.
pub fn build_neighbor_index(
    table: &ObservationTable,
    scaler: &KnnScaler,
    folds: Option<&[usize]>,
) -> Result<NeighborIndex, FeatureError> {
    let points = table
        .records()
        .iter()
        .map(|r| scaler.point(r).map(|p| p.to_vec()))
        .collect();
    NeighborIndex::new(4, points, folds.map(<[usize]>::to_vec))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborMeans {
    pub mean: Vec<f64>,
    pub count: Vec<usize>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Per row, the mean of `values` over its `k` nearest eligible neighbours.
/// A neighbour is eligible when it is another row with a present value and,
/// in out-of-fold mode, lies in a different fold. Rows with no eligible
/// neighbour get the fallback mean (all present values, or those outside the
/// row's fold in out-of-fold mode) and count 0.
pub fn neighbor_mean_features(
    index: &NeighborIndex,
    values: &[Option<f64>],
    k: usize,
    mode: NeighborMode,
) -> Result<NeighborMeans, FeatureError> {
    if k < 1 {
        return Err(FeatureError::Parameter("k must be >= 1".into()));
    }
    if values.len() != index.table_rows() {
        return Err(FeatureError::Parameter(format!(
            "{} values for {} rows",
            values.len(),
            index.table_rows()
        )));
    }
    let folds = index.mode_folds(mode)?;
    let global = mean_of(values.iter().flatten().copied()).unwrap_or(0.0);
    let fold_fallback = |row: usize| match folds {
        None => global,
        Some(f) => mean_of(
            values
                .iter()
                .zip(f)
                .filter(|&(_, &fold)| fold != f[row])
                .filter_map(|(v, _)| *v),
        )
        .unwrap_or(0.0),
    };
    let mut fallback_cache: std::collections::BTreeMap<usize, f64> = Default::default();
    if let Some(f) = folds {
        for row in 0..values.len() {
            fallback_cache.entry(f[row]).or_insert_with(|| fold_fallback(row));
        }
    }
    let fallback = |row: usize| folds.map_or(global, |f| fallback_cache[&f[row]]);

    let results: Vec<(f64, usize)> = (0..values.len())
        .into_par_iter()
        .map(|row| {
            let Some(q) = index.coordinates_of(row) else {
                return (fallback(row), 0);
            };
            let hits = index.query(q, k, |r| {
                r != row && values[r].is_some() && folds.map_or(true, |f| f[r] != f[row])
            });
            match mean_of(hits.iter().filter_map(|&(r, _)| values[r])) {
                Some(m) => (m, hits.len()),
                None => (fallback(row), 0),
            }
        })
        .collect();
    Ok(NeighborMeans {
        mean: results.iter().map(|r| r.0).collect(),
        count: results.iter().map(|r| r.1).collect(),
    })
}

/// Neighbour means for points outside the index (every indexed row with a
/// present value is eligible). `None` points get the global mean.
pub fn neighbor_means_for_points(
    index: &NeighborIndex,
    values: &[Option<f64>],
    points: &[Option<Vec<f64>>],
    k: usize,
) -> Result<NeighborMeans, FeatureError> {
    if k < 1 {
        return Err(FeatureError::Parameter("k must be >= 1".into()));
    }
    if values.len() != index.table_rows() {
        return Err(FeatureError::Parameter("values not aligned with index".into()));
    }
    let global = mean_of(values.iter().flatten().copied()).unwrap_or(0.0);
    let results: Vec<(f64, usize)> = points
        .par_iter()
        .map(|p| match p {
            None => (global, 0),
            Some(q) => {
                let hits = index.query(q, k, |r| values[r].is_some());
                match mean_of(hits.iter().filter_map(|&(r, _)| values[r])) {
                    Some(m) => (m, hits.len()),
                    None => (global, 0),
                }
            }
        })
        .collect();
    Ok(NeighborMeans {
        mean: results.iter().map(|r| r.0).collect(),
        count: results.iter().map(|r| r.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], folds: Option<Vec<usize>>) -> NeighborIndex {
        NeighborIndex::new(1, xs.iter().map(|&x| Some(vec![x])).collect(), folds).unwrap()
    }

    #[test]
    fn one_dimensional_neighbors_exclude_self() {
        let idx = line(&[0.0, 1.0, 3.0], None);
        let hits: Vec<usize> = idx
            .neighbors_of_row(0, 2, NeighborMode::All)
            .unwrap()
            .into_iter()
            .map(|h| h.0)
            .collect();
        assert_eq!(hits, [1, 2]);
    }

    #[test]
    fn k_beyond_population_truncates() {
        let idx = line(&[0.0, 1.0, 3.0], None);
        assert_eq!(idx.neighbors_of_row(1, 10, NeighborMode::All).unwrap().len(), 2);
    }

    #[test]
    fn duplicate_point_counts_at_zero_distance() {
        let idx = line(&[5.0, 5.0, 9.0], None);
        let hits = idx.neighbors_of_row(0, 1, NeighborMode::All).unwrap();
        assert_eq!(hits, [(1, 0.0)]);
    }

    #[test]
    fn neighbor_means_by_hand() {
        let idx = line(&[0.0, 1.0, 3.0], None);
        let vals = [Some(10.0), Some(20.0), Some(40.0)];
        let k1 = neighbor_mean_features(&idx, &vals, 1, NeighborMode::All).unwrap();
        assert_eq!(k1.mean[0], 20.0);
        let k2 = neighbor_mean_features(&idx, &vals, 2, NeighborMode::All).unwrap();
        assert_eq!(k2.mean[1], 25.0);
        assert_eq!(k2.count[1], 2);
    }

    #[test]
    fn no_eligible_neighbour_uses_fallback() {
        // row 0 is alone in fold 0; every other row shares fold 1 with row 1
        let idx = line(&[0.0, 1.0, 2.0], Some(vec![0, 1, 1]));
        let vals = [Some(1.0), Some(2.0), None];
        let m = neighbor_mean_features(&idx, &vals, 3, NeighborMode::OutOfFold).unwrap();
        assert_eq!((m.mean[0], m.count[0]), (2.0, 1));
        // row 1's only other-fold neighbour is row 0
        assert_eq!((m.mean[1], m.count[1]), (1.0, 1));
        let vals = [None, Some(2.0), Some(3.0)];
        let m = neighbor_mean_features(&idx, &vals, 3, NeighborMode::OutOfFold).unwrap();
        // rows 1 and 2 see only row 0, whose value is missing: fallback is the
        // mean outside fold 1, which is empty, hence 0
        assert_eq!((m.mean[1], m.count[1]), (0.0, 0));
        assert_eq!((m.mean[0], m.count[0]), (2.5, 2));
    }

    #[test]
    fn parameter_errors() {
        let idx = line(&[0.0, 1.0], None);
        assert!(neighbor_mean_features(&idx, &[Some(1.0), Some(2.0)], 0, NeighborMode::All).is_err());
        assert!(neighbor_mean_features(&idx, &[Some(1.0), Some(2.0)], 1, NeighborMode::OutOfFold).is_err());
        assert_eq!(
            NeighborIndex::new(1, vec![Some(vec![0.0]), None], None).unwrap_err(),
            FeatureError::InsufficientData(1)
        );
    }
}
