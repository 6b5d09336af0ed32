//! Derived per-stain features: impact angle, adjusted impact angle and the
//! distance of each stain from the pattern centroid.

use serde::{Deserialize, Serialize};

use crate::regions::{EllipseParams, StainRegion};
use crate::{Error, Result};

/// A filtered stain together with its derived features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StainFeatures {
    pub region: StainRegion,
    /// Radians in (0, π/2].
    pub impact_angle: f64,
    pub epsilon: f64,
    /// Pixels from the pattern centroid.
    pub distance: f64,
    /// Distance over the pattern's median stain distance; `None` when that
    /// median is zero.
    pub ratio_distance: Option<f64>,
}

impl StainFeatures {
    pub fn centroid(&self) -> (f64, f64) {
        self.region.ellipse.centroid
    }
}

/// `asin(minor / major)`, in radians.
pub fn impact_angle(e: &EllipseParams) -> f64 {
    (e.minor_axis_length / e.major_axis_length)
        .clamp(0.0, 1.0)
        .asin()
}

/// Axis ratio with the major axis stretched by `filled_area / ellipse_area`,
/// which shrinks ε for stains whose tails make them larger than their ellipse.
pub fn adjusted_impact_angle(e: &EllipseParams, filled_area: f64) -> f64 {
    let adjusted_major = e.major_axis_length * (filled_area / e.area());
    e.minor_axis_length / adjusted_major
}

/// Median of a non-empty slice; the midpoint of the two middle values for
/// even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Componentwise median of stain centroids.
pub fn pattern_centroid(centroids: &[(f64, f64)]) -> Result<(f64, f64)> {
    let xs: Vec<f64> = centroids.iter().map(|c| c.0).collect();
    let ys: Vec<f64> = centroids.iter().map(|c| c.1).collect();
    match (median(&xs), median(&ys)) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(Error::InvalidInput(
            "pattern centroid of an empty stain list".into(),
        )),
    }
}

/// Euclidean distances to `center` and the same distances divided by their
/// median.
pub fn stain_distances(
    centroids: &[(f64, f64)],
    center: (f64, f64),
) -> (Vec<f64>, Vec<Option<f64>>) {
    let distances: Vec<f64> = centroids
        .iter()
        .map(|c| (c.0 - center.0).hypot(c.1 - center.1))
        .collect();
    let ratios = match median(&distances) {
        Some(m) if m > 0.0 => distances.iter().map(|d| Some(d / m)).collect(),
        _ => vec![None; distances.len()],
    };
    (distances, ratios)
}

/// Computes the derived features of every stain in a pattern, together with
/// the pattern centroid.
pub fn stain_features(regions: &[StainRegion]) -> Result<(Vec<StainFeatures>, (f64, f64))> {
    let centroids: Vec<(f64, f64)> = regions.iter().map(|r| r.ellipse.centroid).collect();
    let center = pattern_centroid(&centroids)?;
    let (distances, ratios) = stain_distances(&centroids, center);
    let features = regions
        .iter()
        .zip(distances)
        .zip(ratios)
        .map(|((r, distance), ratio_distance)| StainFeatures {
            impact_angle: impact_angle(&r.ellipse),
            epsilon: adjusted_impact_angle(&r.ellipse, r.filled_area as f64),
            distance,
            ratio_distance,
            region: r.clone(),
        })
        .collect();
    Ok((features, center))
}
