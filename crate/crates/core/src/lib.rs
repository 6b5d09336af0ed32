//! Feature extraction and mechanism classification for scanned bloodstain
//! spatter patterns.
//!
//! The pipeline stages are:
//!
//! 1. [`imgproc`] – grayscale conversion, inversion, binarization and
//!    8-connected component labeling.
//! 2. [`regions`] – per-region moments, ellipse fit, convex hull solidity and
//!    the stain filter.
//! 3. [`stainfeat`] – impact angle, adjusted impact angle and distance to the
//!    pattern centroid.
//! 4. [`patternfeat`] – consolidation of stains into the 48-entry pattern
//!    feature vector.
//! 5. [`learn`] – boosted trees, random forest, imputation, repeated-split
//!    evaluation and the stability importance score.
//! 6. [`harness`] – manifests, batch extraction, synthetic patterns and
//!    experiment orchestration.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod imgproc;
pub mod learn;
pub mod patternfeat;
pub mod regions;
pub mod stainfeat;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Mechanism that generated a spatter pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Gunshot,
    Impact,
}

impl Mechanism {
    /// Binary class used by the classifiers (1 = gunshot).
    pub fn class(self) -> u8 {
        match self {
            Mechanism::Gunshot => 1,
            Mechanism::Impact => 0,
        }
    }

    pub fn from_class(class: u8) -> Option<Self> {
        match class {
            1 => Some(Mechanism::Gunshot),
            0 => Some(Mechanism::Impact),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Gunshot => "gunshot",
            Mechanism::Impact => "impact",
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gunshot" | "gun" | "1" => Ok(Mechanism::Gunshot),
            "impact" | "0" => Ok(Mechanism::Impact),
            other => Err(Error::InvalidInput(format!(
                "unknown mechanism label '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
