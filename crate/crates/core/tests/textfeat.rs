use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;
use proptest::prelude::*;
use skyglow::linalg::{CsrMatrix, DenseMatrix};
use skyglow::textfeat::*;

const WORDS: &[&str] = &["dark", "sky", "moon", "cloud", "haze", "lamp", "street", "milky", "way", "stars"];

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    proptest::collection::vec(
        proptest::collection::vec(proptest::sample::select(WORDS).prop_map(String::from), 0..8),
        1..40,
    )
}

/// Direct TF-IDF: document frequencies by scanning, cap by (df desc, token asc),
/// raw counts times smoothed idf, L2 row normalisation.
fn tfidf_oracle(docs: &[Vec<String>], cap: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let tokens: BTreeSet<&String> = docs.iter().flatten().collect();
    let df = |t: &str| docs.iter().filter(|d| d.iter().any(|x| x == t)).count();
    let mut ranked: Vec<&String> = tokens.into_iter().collect();
    ranked.sort_by(|a, b| df(b).cmp(&df(a)).then(a.cmp(b)));
    ranked.truncate(cap);
    ranked.sort();
    let n = docs.len() as f64;
    let rows = docs
        .iter()
        .map(|d| {
            let raw: Vec<f64> = ranked
                .iter()
                .map(|t| {
                    let tf = d.iter().filter(|x| x == t).count() as f64;
                    tf * (((1.0 + n) / (1.0 + df(t) as f64)).ln() + 1.0)
                })
                .collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            raw.iter().map(|v| if norm > 0.0 { v / norm } else { 0.0 }).collect()
        })
        .collect();
    (ranked.into_iter().cloned().collect(), rows)
}

fn random_dense(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let data = (0..rows * cols)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

fn reference_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let m = DMatrix::from_row_slice(a.rows(), a.cols(), a.data());
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tfidf_matches_oracle(docs in corpus(), cap in 1usize..12) {
        let model = fit_tfidf(&docs, cap).unwrap();
        let (vocab, rows) = tfidf_oracle(&docs, cap);
        prop_assert_eq!(model.vocabulary(), &vocab[..]);
        let m = transform_tfidf(&model, &docs);
        for (i, row) in rows.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                prop_assert!((m.get(i, j) - want).abs() < 1e-12);
            }
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_tokens_are_ignored(docs in corpus()) {
        let model = fit_tfidf(&docs, 20).unwrap();
        let probe = vec!["zzz".to_string(), "qq".to_string()];
        let m = transform_tfidf(&model, &[probe]);
        prop_assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn tokens_are_lowercase_alphanumeric(text in "\\PC{0,40}") {
        for t in tokenize(Some(&text)) {
            prop_assert!(t.chars().count() >= 2);
            prop_assert!(t.chars().all(char::is_alphanumeric));
            prop_assert_eq!(t.to_lowercase(), t.clone());
        }
        let once: Vec<String> = tokenize(Some(&text));
        let twice: Vec<String> = tokenize(Some(&once.join(" ")));
        prop_assert_eq!(once, twice);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn singular_values_match_reference(rows in 3usize..40, cols in 3usize..30, rank in 1usize..6, seed in any::<u64>()) {
        let rank = rank.min(rows.min(cols));
        let a = random_dense(rows, cols, seed);
        let model = fit_truncated_svd(&a, rank, seed).unwrap();
        let want = reference_singular_values(&a);
        for (got, want) in model.singular_values().iter().zip(&want) {
            prop_assert!((got - want).abs() <= 1e-6 * want.max(1e-12), "{} vs {}", got, want);
        }
        let c = model.components();
        for i in 0..rank {
            for j in 0..rank {
                let dot: f64 = c.row(i).iter().zip(c.row(j)).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expected).abs() < 1e-9);
            }
            let row = c.row(i);
            let peak = row.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            prop_assert!(peak > 0.0);
        }
    }

    #[test]
    fn sparse_and_dense_inputs_agree(docs in corpus(), seed in any::<u64>()) {
        let model = fit_tfidf(&docs, 10).unwrap();
        let sparse = transform_tfidf(&model, &docs);
        prop_assume!(sparse.rows().min(sparse.cols()) >= 2);
        let dense = sparse.to_dense();
        let a = fit_truncated_svd(&sparse, 2, seed).unwrap();
        let b = fit_truncated_svd(&dense, 2, seed).unwrap();
        for (x, y) in a.singular_values().iter().zip(b.singular_values()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y));
        }
        let pa = transform_svd(&a, &sparse).unwrap();
        let pb = transform_svd(&b, &dense).unwrap();
        prop_assert_eq!(pa.rows(), docs.len());
        for (x, y) in pa.data().iter().zip(pb.data()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn same_seed_same_components() {
    let a = random_dense(30, 12, 5);
    let x = fit_truncated_svd(&a, 3, 9).unwrap();
    let y = fit_truncated_svd(&a, 3, 9).unwrap();
    assert_eq!(x, y);
}

#[test]
fn rank_out_of_range_is_an_error() {
    let a = random_dense(4, 3, 1);
    assert!(fit_truncated_svd(&a, 0, 0).is_err());
    assert!(fit_truncated_svd(&a, 4, 0).is_err());
    let wide = CsrMatrix::from_dense(&a);
    let m = fit_truncated_svd(&wide, 3, 0).unwrap();
    assert!(transform_svd(&m, &random_dense(2, 5, 0)).is_err());
}

#[test]
fn cap_keeps_most_frequent_tokens() {
    let docs: Vec<Vec<String>> = ["sky dark", "sky moon", "sky dark lamp"]
        .iter()
        .map(|s| tokenize(Some(s)))
        .collect();
    let model = fit_tfidf(&docs, 2).unwrap();
    assert_eq!(model.vocabulary(), ["dark", "sky"]);
    let idf_sky = model.idf_of("sky").unwrap();
    assert!((idf_sky - 1.0).abs() < 1e-15);
    let unique: HashSet<&String> = model.vocabulary().iter().collect();
    assert_eq!(unique.len(), 2);
    assert_eq!(fit_tfidf(&[], 3).unwrap_err(), TextError::EmptyCorpus);
    assert_eq!(fit_tfidf(&docs, 0).unwrap_err(), TextError::ZeroCap);
}

fn reconstruction_error(a: &DenseMatrix, rank: usize, seed: u64) -> f64 {
    let model = fit_truncated_svd(a, rank, seed).unwrap();
    let coords = transform_svd(&model, a).unwrap();
    let back = coords.matmul(model.components()).unwrap();
    a.data().iter().zip(back.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reconstruction_error_shrinks_with_rank(rows in 3usize..30, cols in 3usize..20, seed in any::<u64>()) {
        let a = random_dense(rows, cols, seed);
        let max = rows.min(cols).min(10);
        let errors: Vec<f64> = (1..=max).map(|r| reconstruction_error(&a, r, seed)).collect();
        for w in errors.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", errors);
        }
    }
}

#[test]
fn projection_of_component_and_zero_rows() {
    let a = random_dense(20, 8, 3);
    let model = fit_truncated_svd(&a, 3, 1).unwrap();
    let c = model.components();
    let p = transform_svd(&model, c).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((p.get(i, j) - want).abs() < 1e-9);
        }
    }
    let z = transform_svd(&model, &DenseMatrix::zeros(1, 8)).unwrap();
    assert!(z.data().iter().all(|&v| v == 0.0));
}
