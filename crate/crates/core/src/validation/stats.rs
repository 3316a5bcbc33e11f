use std::collections::BTreeMap;
use std::io::Write;

use chrono::Datelike;
use serde::Serialize;

use super::ValidationError;
use crate::dataset::{NumericField, ObservationTable};

/// Product-moment correlation over the complete pairs.
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>]) -> Result<f64, ValidationError> {
    if x.len() != y.len() {
        return Err(ValidationError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    if pairs.len() < 2 {
        return Err(ValidationError::UndefinedCorrelation(format!(
            "{} complete pairs",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ValidationError::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YearMean {
    pub year: i32,
    pub mean: f64,
    pub count: usize,
}

/// Mean of `field` per calendar year of the observation time; years without
/// any present value are left out.
pub fn annual_trend(table: &ObservationTable, field: NumericField) -> Vec<YearMean> {
    let mut acc: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for i in 0..table.len() {
        let Some(t) = table.records()[i].time else { continue };
        let Some(v) = table.numeric(field, i) else { continue };
        let e = acc.entry(t.year()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(year, (sum, count))| YearMean {
            year,
            mean: sum / count as f64,
            count,
        })
        .collect()
}

/// Columns `field,year,mean,count`.
pub fn write_trend_csv<W: Write>(trends: &[(String, Vec<YearMean>)], sink: W) -> Result<(), ValidationError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["field", "year", "mean", "count"])?;
    for (field, rows) in trends {
        for r in rows {
            w.write_record([field.clone(), r.year.to_string(), r.mean.to_string(), r.count.to_string()])?;
        }
    }
    w.flush().map_err(|e| ValidationError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_timestamp, ObservationRecord};

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn closed_form_cases() {
        assert_eq!(pearson(&some(&[1., 2., 3.]), &some(&[2., 4., 6.])).unwrap(), 1.0);
        assert_eq!(pearson(&some(&[1., 2., 3.]), &some(&[3., 2., 1.])).unwrap(), -1.0);
        let r = pearson(&some(&[1., 2., 3., 4.]), &some(&[1., 3., 2., 4.])).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn undefined_cases() {
        assert!(pearson(&some(&[1., 1., 1.]), &some(&[1., 2., 3.])).is_err());
        assert!(pearson(&[Some(1.0), None, Some(2.0)], &[Some(1.0), Some(2.0), None]).is_err());
    }

    fn rec(id: &str, t: &str, lm: Option<f64>) -> ObservationRecord {
        ObservationRecord {
            id: id.into(),
            time: parse_timestamp(t),
            limiting_magnitude: lm,
            ..Default::default()
        }
    }

    #[test]
    fn yearly_means() {
        let t = ObservationTable::new(vec![
            rec("a", "2006-01-01 20:00:00", Some(4.0)),
            rec("b", "2006-05-01 20:00:00", Some(6.0)),
            rec("c", "2007-01-01 20:00:00", Some(5.0)),
            rec("d", "2008-01-01 20:00:00", None),
        ])
        .unwrap();
        let tr = annual_trend(&t, NumericField::LimitingMagnitude);
        assert_eq!(tr.iter().map(|y| (y.year, y.mean)).collect::<Vec<_>>(), [(2006, 5.0), (2007, 5.0)]);
    }
}
