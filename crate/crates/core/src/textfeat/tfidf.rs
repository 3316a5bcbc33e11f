use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::TextError;
use crate::linalg::CsrMatrix;

/// Fitted vocabulary and smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TfidfRepr", into = "TfidfRepr")]
pub struct TfidfModel {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    n_documents: usize,
    cap: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TfidfRepr {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    n_documents: usize,
    cap: usize,
}

impl From<TfidfRepr> for TfidfModel {
    fn from(r: TfidfRepr) -> Self {
        let index = r
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TfidfModel {
            vocabulary: r.vocabulary,
            idf: r.idf,
            n_documents: r.n_documents,
            cap: r.cap,
            index,
        }
    }
}

impl From<TfidfModel> for TfidfRepr {
    fn from(m: TfidfModel) -> Self {
        TfidfRepr {
            vocabulary: m.vocabulary,
            idf: m.idf,
            n_documents: m.n_documents,
            cap: m.cap,
        }
    }
}

impl TfidfModel {
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.idf[i])
    }

    pub fn column_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// True when no document contributed a token.
    pub fn is_degenerate(&self) -> bool {
        self.vocabulary.is_empty()
    }
}

/// Keeps the `cap` tokens with the highest document frequency (ties
/// lexicographic); columns are ordered lexicographically.
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
pub fn fit_tfidf(corpus: &[Vec<String>], cap: usize) -> Result<TfidfModel, TextError> {
    if corpus.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    if cap == 0 {
        return Err(TextError::ZeroCap);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in corpus {
        let uniq: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    let chosen: BTreeMap<&str, usize> = ranked.into_iter().collect();

    let n = corpus.len();
    let vocabulary: Vec<String> = chosen.keys().map(|t| t.to_string()).collect();
    let idf = chosen
        .values()
        .map(|&d| ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    Ok(TfidfRepr {
        vocabulary,
        idf,
        n_documents: n,
        cap,
    }
    .into())
}

/// Raw term count times idf, each row scaled to unit L2 norm. Unknown tokens
/// are ignored and empty rows stay zero.
pub fn transform_tfidf(model: &TfidfModel, documents: &[Vec<String>]) -> CsrMatrix {
    let rows = documents
        .iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for t in doc {
                if let Some(&c) = model.index.get(t.as_str()) {
                    *counts.entry(c).or_default() += 1.0;
                }
            }
            let mut row: Vec<(usize, f64)> = counts
                .into_iter()
                .map(|(c, tf)| (c, tf * model.idf[c]))
                .collect();
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|(_, v)| *v /= norm);
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(model.vocabulary.len(), rows).expect("columns come from the vocabulary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textfeat::tokenize;

    fn corpus(docs: &[&str]) -> Vec<Vec<String>> {
        docs.iter().map(|d| tokenize(Some(d))).collect()
    }

    #[test]
    fn idf_matches_hand_values() {
        let m = fit_tfidf(&corpus(&["dark sky", "bright sky"]), 100).unwrap();
        assert!((m.idf_of("dark").unwrap() - 1.405_465_108_108_164_4).abs() < 1e-12);
        assert_eq!(m.idf_of("sky").unwrap(), 1.0);
        assert_eq!(m.vocabulary(), ["bright", "dark", "sky"]);
    }

    #[test]
    fn token_in_every_document_has_unit_idf() {
        let docs: Vec<String> = (0..500).map(|i| format!("sky w{i}")).collect();
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        let m = fit_tfidf(&corpus(&refs), 10_000).unwrap();
        assert_eq!(m.idf_of("sky"), Some(1.0));
    }

    #[test]
    fn cap_keeps_highest_df() {
        let m = fit_tfidf(&corpus(&["dark sky", "bright sky"]), 1).unwrap();
        assert_eq!(m.vocabulary(), ["sky"]);
    }

    #[test]
    fn transform_normalises_rows() {
        let m = fit_tfidf(&corpus(&["dark sky", "bright sky"]), 100).unwrap();
        let x = transform_tfidf(&m, &corpus(&["dark sky", "", "dark dark", "nebula"]));
        let dark = m.column_of("dark").unwrap();
        let sky = m.column_of("sky").unwrap();
        assert!((x.get(0, dark) - 0.814_802).abs() < 1e-5);
        assert!((x.get(0, sky) - 0.579_738).abs() < 1e-5);
        assert_eq!(x.row(1).count(), 0);
        assert_eq!(x.get(2, dark), 1.0);
        assert_eq!(x.get(2, sky), 0.0);
        assert_eq!(x.row(3).count(), 0);
    }

    #[test]
    fn all_empty_documents_give_degenerate_model() {
        let m = fit_tfidf(&[vec![], vec![]], 10).unwrap();
        assert!(m.is_degenerate());
        assert_eq!(fit_tfidf(&[], 10), Err(TextError::EmptyCorpus));
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let m = fit_tfidf(&corpus(&["dark sky", "bright sky"]), 100).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: TfidfModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.column_of("sky"), m.column_of("sky"));
    }
}
