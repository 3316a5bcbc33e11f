//! Small dense/sparse matrix toolkit backing the truncated SVD.
//!
//! Only what the text pipeline needs: row-major dense matrices, CSR sparse
//! matrices, a thin Householder QR and a one-sided Jacobi SVD for the small
//! projected problem.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rank {rank} outside [1, {max}]")]
    RankOutOfRange { rank: usize, max: usize },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Keeps the first `n` columns.
    pub fn truncate_cols(&self, n: usize) -> DenseMatrix {
        let n = n.min(self.cols);
        let mut out = DenseMatrix::zeros(self.rows, n);
        for i in 0..self.rows {
            out.data[i * n..(i + 1) * n].copy_from_slice(&self.row(i)[..n]);
        }
        out
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Columns within a row must
    /// be distinct and `< cols`.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, LinalgError> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut r in rows.iter().cloned() {
            r.sort_by_key(|&(c, _)| c);
            for (c, v) in r {
                if c >= cols {
                    return Err(LinalgError::DimensionMismatch {
                        expected: cols,
                        found: c + 1,
                    });
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let rows = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(m.cols(), rows).expect("columns in range")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                d.set(i, j, v);
            }
        }
        d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }
}

/// Anything that can be multiplied by a dense block from the right, and
/// whose transpose can be.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self · x`, with `x` of shape `ncols × k`.
    fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix;
    /// `selfᵀ · y`, with `y` of shape `nrows × k`.
    fn tmul_dense(&self, y: &DenseMatrix) -> DenseMatrix;
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        self.matmul(x).expect("shape checked by caller")
    }

    fn tmul_dense(&self, y: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, y.rows);
        let k = y.cols;
        let mut out = DenseMatrix::zeros(self.cols, k);
        for i in 0..self.rows {
            let yrow = y.row(i);
            for (j, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out.data[j * k..(j + 1) * k].iter_mut().zip(yrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, x.rows);
        let k = x.cols;
        let mut out = DenseMatrix::zeros(self.rows, k);
        for i in 0..self.rows {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let orow = &mut out.data[i * k..(i + 1) * k];
            for p in a..b {
                let v = self.values[p];
                for (o, &xv) in orow.iter_mut().zip(x.row(self.indices[p])) {
                    *o += v * xv;
                }
            }
        }
        out
    }

    fn tmul_dense(&self, y: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, y.rows);
        let k = y.cols;
        let mut out = DenseMatrix::zeros(self.cols, k);
        for i in 0..self.rows {
            let yrow = y.row(i);
            for (j, v) in self.row(i) {
                for (o, &yv) in out.data[j * k..(j + 1) * k].iter_mut().zip(yrow) {
                    *o += v * yv;
                }
            }
        }
        out
    }
}

/// Orthonormal basis for the column space of `a` (shape `m × n`, `m ≥ n`)
/// via Householder reflections. Returns the thin `Q` (`m × n`).
pub fn thin_q(a: &DenseMatrix) -> DenseMatrix {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "thin_q needs at least as many rows as columns");
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let x = &cols[k][k..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        if norm > 0.0 {
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
        }
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|t| *t /= vnorm);
        }
        for col in cols.iter_mut().skip(k) {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= 2.0 * dot * vi;
            }
        }
        reflectors.push(v);
    }
    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        for k in (0..n).rev() {
            let v = &reflectors[k];
            let dot: f64 = v.iter().zip(&e[k..]).map(|(a, b)| a * b).sum();
            for (c, vi) in e[k..].iter_mut().zip(v) {
                *c -= 2.0 * dot * vi;
            }
        }
        for (i, val) in e.into_iter().enumerate() {
            q.set(i, j, val);
        }
    }
    q
}

/// Thin SVD `a = U diag(s) Vᵀ` of an `m × n` matrix with `m ≥ n`, by
/// one-sided (Hestenes) Jacobi rotations. Singular values are returned in
/// nonincreasing order; `U` is `m × n`, `V` is `n × n`.
pub fn jacobi_svd(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n, "jacobi_svd needs at least as many rows as columns");
    let mut g: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let eps = f64::EPSILON;
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = g[p].iter().map(|x| x * x).sum();
                let beta: f64 = g[q].iter().map(|x| x * x).sum();
                let gamma: f64 = g[p].iter().zip(&g[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (gp, gq) = pair_mut(&mut g, p, q);
                for (x, y) in gp.iter_mut().zip(gq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
                let (vp, vq) = pair_mut(&mut v, p, q);
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = g
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        if sigma > 0.0 {
            for i in 0..m {
                u.set(i, dst, g[src][i] / sigma);
            }
        }
        for i in 0..n {
            vm.set(i, dst, v[src][i]);
        }
    }
    (u, s, vm)
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (a, b) = v.split_at_mut(q);
    (&mut a[p], &mut b[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![2.0, 0.0, 1.0],
            vec![1.0, 3.0, 0.0],
            vec![0.0, 1.0, 4.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn thin_q_is_orthonormal_and_spans() {
        let a = sample();
        let q = thin_q(&a);
        let qtq = q.transpose().matmul(&q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - want).abs() < 1e-12);
            }
        }
        // projecting a onto span(Q) reproduces a
        let proj = q.matmul(&q.transpose().matmul(&a).unwrap()).unwrap();
        for (x, y) in proj.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = sample();
        let (u, s, v) = jacobi_svd(&a);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let mut us = u.clone();
        for i in 0..us.rows() {
            for j in 0..3 {
                us.set(i, j, us.get(i, j) * s[j]);
            }
        }
        let back = us.matmul(&v.transpose()).unwrap();
        for (x, y) in back.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let a = sample();
        let sp = CsrMatrix::from_dense(&a);
        let x = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(sp.mul_dense(&x), a.mul_dense(&x));
        let y = DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(sp.tmul_dense(&y), a.tmul_dense(&y));
        assert_eq!(sp.to_dense(), a);
    }
}
