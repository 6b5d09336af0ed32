//! Consolidation of per-stain features into the per-pattern feature vector.

pub mod bins;
pub mod circular;
pub mod consolidate;
mod registry;
pub mod summary;

pub use bins::{assign_bin, BinKind, BinningScheme, BIN_COUNT};
pub use circular::{angular_variance, incident_vector, scatter_summary, ScatterSummary};
pub use registry::{
    build_feature_vector, large_stain_thresholds, PatternFeatures, PatternMeta, FEATURE_COUNT,
    FEATURE_NAMES, MIN_STAINS,
};
pub use summary::{class_summary, BoxStats, ClassSummary};

/// Pixels per millimetre for a scan resolution in dots per inch.
pub fn pixels_per_mm(dpi: f64) -> f64 {
    dpi / 25.4
}
