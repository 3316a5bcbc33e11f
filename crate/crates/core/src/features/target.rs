use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::N_CLASSES;

/// Integer limiting-magnitude class in `0..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TargetClass(u8);

impl TargetClass {
    pub fn new(id: usize) -> Option<Self> {
        (id < N_CLASSES).then_some(TargetClass(id as u8))
    }

    pub fn id(self) -> usize {
        usize::from(self.0)
    }
}

/// Round half up, then clamp into `0..=7`.
pub fn bin_target(limiting_magnitude: Option<f64>) -> Result<TargetClass, FeatureError> {
    match limiting_magnitude {
        Some(v) if v.is_finite() => {
            let rounded = (v + 0.5).floor().clamp(0.0, (N_CLASSES - 1) as f64);
            Ok(TargetClass(rounded as u8))
        }
        _ => Err(FeatureError::MissingTarget),
    }
}
