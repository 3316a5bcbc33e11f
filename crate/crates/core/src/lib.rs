//! Night-sky brightness modelling on citizen-science observations.
//!
//! The crate covers the whole offline workflow: parsing and joining the
//! observation and census tables ([`dataset`]), numeric feature construction
//! including nearest-neighbour aggregates ([`features`]) and latent text
//! features ([`textfeat`]), two native tree-ensemble classifiers
//! ([`learners`]), stratified cross-validation with the micro-F1 metric
//! family ([`validation`]) and simplex-weight blending of out-of-fold
//! probabilities ([`ensemble`]).

pub mod dataset;
pub mod ensemble;
mod error;
pub mod features;
pub mod learners;
pub mod linalg;
pub mod svg;
pub mod synth;
pub mod textfeat;
pub mod validation;

pub use error::{Error, Result};

/// Number of limiting-magnitude classes (magnitudes 0 through 7).
pub const N_CLASSES: usize = 8;
