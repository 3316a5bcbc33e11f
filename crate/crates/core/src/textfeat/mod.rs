//! Latent text features: TF-IDF weighting followed by a truncated SVD.

mod svd;
mod tfidf;

use thiserror::Error;

pub use svd::{fit_truncated_svd, transform_svd, SvdModel, OVERSAMPLES, POWER_ITERATIONS};
pub use tfidf::{fit_tfidf, transform_tfidf, TfidfModel};

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("vocabulary cap must be at least 1")]
    ZeroCap,
}

/// Lowercases, splits on every non-alphanumeric character and drops tokens
/// shorter than two characters.
pub fn tokenize(text: Option<&str>) -> Vec<String> {
    let Some(text) = text else {
        return Vec::new();
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize(Some("Clear, DARK sky!")), ["clear", "dark", "sky"]);
        assert!(tokenize(Some("a b!!")).is_empty());
        assert!(tokenize(None).is_empty());
        assert!(tokenize(Some("")).is_empty());
        assert_eq!(tokenize(Some("Ñandú_42x")), ["ñandú", "42x"]);
    }
}
