use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{jacobi_svd, thin_q, DenseMatrix, LinalgError, LinearOperator};

/// Extra random probe vectors beyond the requested rank.
pub const OVERSAMPLES: usize = 8;
/// Power iterations always performed after the initial range sample.
pub const POWER_ITERATIONS: usize = 4;
/// Further subspace iterations allowed while the top-r space is still moving.
const MAX_REFINEMENTS: usize = 300;
/// Convergence threshold on `r - ‖V_prevᵀ V_next‖²_F` (squared subspace angle).
const SUBSPACE_TOL: f64 = 1e-24;

/// Rank-r truncated SVD: right singular vectors as component rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    rank: usize,
    components: DenseMatrix,
    singular_values: Vec<f64>,
    seed: u64,
}

impl SvdModel {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `rank × n_features`, orthonormal rows.
    pub fn components(&self) -> &DenseMatrix {
        &self.components
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn top_right_vectors<A: LinearOperator>(a: &A, q: &DenseMatrix, r: usize) -> (DenseMatrix, Vec<f64>) {
    // Bᵀ = Aᵀ Q is n × l; its left singular vectors are B's right ones.
    let bt = a.tmul_dense(q);
    let (w, s, _) = jacobi_svd(&bt);
    (w.truncate_cols(r), s[..r].to_vec())
}

fn subspace_gap(prev: &DenseMatrix, next: &DenseMatrix) -> f64 {
    let r = prev.cols();
    let overlap = prev.transpose().matmul(next).expect("same shape");
    let fro2: f64 = overlap.data().iter().map(|v| v * v).sum();
    (r as f64 - fro2).abs()
}

/// Randomized truncated SVD. A seeded Gaussian sketch with `rank + 8`
/// columns is refined by four power iterations; subspace iteration then
/// continues until the leading `rank` right singular vectors stop moving.
/// Component signs are fixed so each row's largest-magnitude entry is
/// positive.
pub fn fit_truncated_svd<A: LinearOperator>(
    a: &A,
    rank: usize,
    seed: u64,
) -> Result<SvdModel, LinalgError> {
    let (m, n) = (a.nrows(), a.ncols());
    let max = m.min(n);
    if rank == 0 || rank > max {
        return Err(LinalgError::RankOutOfRange { rank, max });
    }
    let l = (rank + OVERSAMPLES).min(max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DenseMatrix::from_vec(
        n,
        l,
        (0..n * l).map(|_| StandardNormal.sample(&mut rng)).collect(),
    )?;

    let mut q = thin_q(&a.mul_dense(&omega));
    let step = |q: &DenseMatrix| {
        let z = thin_q(&a.tmul_dense(q));
        thin_q(&a.mul_dense(&z))
    };
    for _ in 0..POWER_ITERATIONS {
        q = step(&q);
    }
    let (mut v, mut s) = top_right_vectors(a, &q, rank);
    if l < max {
        for _ in 0..MAX_REFINEMENTS {
            q = step(&q);
            let (v_next, s_next) = top_right_vectors(a, &q, rank);
            let gap = subspace_gap(&v, &v_next);
            v = v_next;
            s = s_next;
            if gap <= SUBSPACE_TOL {
                break;
            }
        }
    }

    let mut components = v.transpose();
    for i in 0..rank {
        let row = components.row(i);
        let (mut best, mut best_abs) = (0usize, -1.0f64);
        for (j, x) in row.iter().enumerate() {
            if x.abs() > best_abs {
                best = j;
                best_abs = x.abs();
            }
        }
        if row[best] < 0.0 {
            for j in 0..n {
                components.set(i, j, -components.get(i, j));
            }
        }
    }
    Ok(SvdModel {
        rank,
        components,
        singular_values: s,
        seed,
    })
}

/// Projects each row onto the component rows: `X · componentsᵀ`.
pub fn transform_svd<A: LinearOperator>(
    model: &SvdModel,
    x: &A,
) -> Result<DenseMatrix, LinalgError> {
    if x.ncols() != model.components.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: model.components.cols(),
            found: x.ncols(),
        });
    }
    Ok(x.mul_dense(&model.components.transpose()))
}
