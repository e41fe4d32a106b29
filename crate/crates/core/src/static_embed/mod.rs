//! Skip-gram with negative sampling (SGNS) and the vector-space file format.

mod space;
mod train;

pub use space::VectorSpace;
pub use train::train_sgns;

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgnsConfig {
    /// Maximum symmetric window; the effective window is drawn from `1..=window`.
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    /// Frequent-word subsampling threshold; `None` disables subsampling.
    pub subsample: Option<f64>,
    pub min_count: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// 1 gives bit-reproducible training; more workers race on shared parameters.
    pub workers: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            window: 10,
            dim: 300,
            epochs: 5,
            negatives: 5,
            subsample: Some(0.001),
            min_count: 39,
            learning_rate: 0.025,
            seed: 0,
            workers: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("window", self.window),
            ("dim", self.dim),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
            ("workers", self.workers),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if let Some(s) = self.subsample {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Config(format!("subsample threshold {s} outside (0, 1)")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}
