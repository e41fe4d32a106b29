//! Lexical semantic change discovery over a diachronic corpus pair.
//!
//! The crate covers the whole pipeline: corpus ingestion and usage sampling,
//! skip-gram embeddings with Orthogonal Procrustes alignment, token-based
//! change measures over externally produced usage vectors, population
//! grading with `mu + t * sigma` thresholding, evaluation and agreement
//! statistics, Word Usage Graphs with correlation clustering, and the
//! annotation project model backing the HTTP service.

pub mod align;
pub mod annotation;
pub mod corpus;
pub mod discovery;
mod error;
pub mod metrics;
mod numeric;
pub mod seed;
pub mod static_embed;
pub mod token_embed;
pub mod wug;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One of the two time periods of a diachronic corpus pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Period {
    C1,
    C2,
}

impl Period {
    pub const BOTH: [Period; 2] = [Period::C1, Period::C2];

    /// Grouping code used in usage exports (`1` or `2`).
    pub fn grouping(self) -> u8 {
        match self {
            Period::C1 => 1,
            Period::C2 => 2,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::C1 => f.write_str("C1"),
            Period::C2 => f.write_str("C2"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" | "C1" => Ok(Period::C1),
            "2" | "C2" => Ok(Period::C2),
            other => Err(Error::InvalidInput(format!("unknown period `{other}`"))),
        }
    }
}
