use std::io::{Read, Write};

use super::ValidationError;
use crate::learners::ProbabilityMatrix;
use crate::N_CLASSES;

/// Out-of-fold class probabilities of one model, one row per labelled
/// observation.
#[derive(Debug, Clone, PartialEq)]
pub struct OofPredictions {
    pub model_id: String,
    pub row_ids: Vec<String>,
    pub folds: Vec<usize>,
    pub probs: ProbabilityMatrix,
}

fn header() -> Vec<String> {
    let mut h = vec!["row_id".to_string(), "fold".into(), "model_id".into()];
    h.extend((0..N_CLASSES).map(|c| format!("p_class_{c}")));
    h
}

/// Columns `row_id,fold,model_id,p_class_0..p_class_7`.
pub fn write_oof_csv<W: Write>(oof: &OofPredictions, sink: W) -> Result<(), ValidationError> {
    if oof.probs.n_classes() != N_CLASSES {
        return Err(ValidationError::Parameter(format!(
            "expected {N_CLASSES} classes, got {}",
            oof.probs.n_classes()
        )));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header())?;
    for (i, id) in oof.row_ids.iter().enumerate() {
        let mut rec = vec![id.clone(), oof.folds[i].to_string(), oof.model_id.clone()];
        rec.extend(oof.probs.row(i).iter().map(|p| p.to_string()));
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| ValidationError::Csv(e.to_string()))
}

pub fn read_oof_csv<R: Read>(source: R) -> Result<OofPredictions, ValidationError> {
    let mut r = csv::Reader::from_reader(source);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header() {
        return Err(ValidationError::Csv(format!("unexpected header {}", found.join(","))));
    }
    let mut model_id: Option<String> = None;
    let (mut row_ids, mut folds, mut data) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let bad = |what: &str| ValidationError::Csv(format!("row {}: bad {what}", &rec[0]));
        row_ids.push(rec[0].to_string());
        folds.push(rec[1].parse::<usize>().map_err(|_| bad("fold"))?);
        match &model_id {
            None => model_id = Some(rec[2].to_string()),
            Some(m) if m != &rec[2] => return Err(bad("model_id")),
            Some(_) => {}
        }
        for c in 0..N_CLASSES {
            let p: f64 = rec[3 + c].parse().map_err(|_| bad("probability"))?;
            if !p.is_finite() {
                return Err(bad("probability"));
            }
            data.push(p);
        }
    }
    Ok(OofPredictions {
        model_id: model_id.unwrap_or_default(),
        row_ids,
        folds,
        probs: ProbabilityMatrix::new(N_CLASSES, data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut row = vec![0.0; N_CLASSES];
        row[3] = 1.0 / 3.0;
        row[5] = 2.0 / 3.0;
        let oof = OofPredictions {
            model_id: "gbdt_full".into(),
            row_ids: vec!["a".into(), "b".into()],
            folds: vec![0, 1],
            probs: ProbabilityMatrix::from_rows(&[row.clone(), row]),
        };
        let mut buf = Vec::new();
        write_oof_csv(&oof, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("row_id,fold,model_id,p_class_0,"));
        assert_eq!(read_oof_csv(buf.as_slice()).unwrap(), oof);
    }
}
