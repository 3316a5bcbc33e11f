use std::io::{Read, Write};

use super::FeatureError;

/// Dense, fully imputed numeric matrix with named columns, row-aligned to a
/// record table through `row_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    row_ids: Vec<String>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// `data` is row-major. Every entry must be finite.
    pub fn new(names: Vec<String>, row_ids: Vec<String>, data: Vec<f64>) -> Result<Self, FeatureError> {
        if data.len() != names.len() * row_ids.len() {
            return Err(FeatureError::Shape(format!(
                "{} values for {} rows × {} columns",
                data.len(),
                row_ids.len(),
                names.len()
            )));
        }
        if !names.is_empty() {
            if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite {
                    column: names[pos % names.len()].clone(),
                    row: pos / names.len(),
                });
            }
        }
        Ok(FeatureMatrix {
            names,
            row_ids,
            data,
        })
    }

    /// Builds from column vectors of equal length.
    pub fn from_columns(
        names: Vec<String>,
        row_ids: Vec<String>,
        columns: &[Vec<f64>],
    ) -> Result<Self, FeatureError> {
        let n = row_ids.len();
        if columns.len() != names.len() || columns.iter().any(|c| c.len() != n) {
            return Err(FeatureError::Shape("column lengths disagree".into()));
        }
        let mut data = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            data.extend(columns.iter().map(|c| c[i]));
        }
        FeatureMatrix::new(names, row_ids, data)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.names.len();
        &self.data[i * c..(i + 1) * c]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.names.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.names.iter().position(|n| n == name).map(|j| self.column(j))
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            names: self.names.clone(),
            row_ids: rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
            data,
        }
    }

    /// Columns of `self` followed by columns of `other`; row ids must agree.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
        if self.row_ids != other.row_ids {
            return Err(FeatureError::Shape("row ids differ".into()));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.n_rows() {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(FeatureMatrix {
            names,
            row_ids: self.row_ids.clone(),
            data,
        })
    }

    /// CSV with a `row_id` column followed by the named feature columns.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["row_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![self.row_ids[i].clone()];
            rec.extend(self.row(i).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| FeatureError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<FeatureMatrix, FeatureError> {
        let mut r = csv::Reader::from_reader(source);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("row_id") {
            return Err(FeatureError::Column("row_id".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut row_ids = Vec::new();
        let mut data = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut it = rec.iter();
            row_ids.push(it.next().unwrap_or("").to_string());
            for (j, cell) in it.enumerate() {
                let v: f64 = cell.parse().map_err(|_| FeatureError::NonFinite {
                    column: names.get(j).cloned().unwrap_or_default(),
                    row: row_ids.len() - 1,
                })?;
                data.push(v);
            }
        }
        FeatureMatrix::new(names, row_ids, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let e = FeatureMatrix::new(vec!["a".into(), "b".into()], vec!["r".into()], vec![1.0, f64::NAN]);
        assert_eq!(e, Err(FeatureError::NonFinite { column: "b".into(), row: 0 }));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            vec!["a".into(), "b".into()],
            vec![0.1, -1e-300, 1.0 / 3.0, 12345.678],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(FeatureMatrix::read_csv(buf.as_slice()).unwrap(), m);
    }
}
