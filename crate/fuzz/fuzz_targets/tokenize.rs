#![no_main]

use libfuzzer_sys::fuzz_target;
use skyglow::textfeat::{fit_tfidf, tokenize, transform_tfidf};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let docs: Vec<Vec<String>> = text.lines().map(|l| tokenize(Some(l))).collect();
    if let Ok(model) = fit_tfidf(&docs, 64) {
        let m = transform_tfidf(&model, &docs);
        for i in 0..m.rows() {
            let norm: f64 = m.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt();
            assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
        }
    }
});
