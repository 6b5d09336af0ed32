//! Per-region measurements: moment-based ellipse fit, filled and convex
//! areas, tone statistics, and the stain filter.

use serde::{Deserialize, Serialize};

use crate::imgproc::{fill_holes, BinaryImage, GrayImage, LabelMap};
use crate::{Error, Result};

/// Ellipse with the same normalized second central moments as a region.
///
/// Coordinates are image pixels (x to the right, y downward). The
/// orientation is measured counter-clockwise from the x-axis as seen on
/// screen, so a blob elongated along +x reads 0° and one rising to the
/// upper right reads positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub centroid: (f64, f64),
    pub major_axis_length: f64,
    pub minor_axis_length: f64,
    /// Degrees in [-90, 90).
    pub orientation: f64,
    pub eccentricity: f64,
}

impl EllipseParams {
    pub fn axis_ratio(&self) -> f64 {
        self.minor_axis_length / self.major_axis_length
    }

    /// Area of the fitted ellipse, `π/4 · major · minor`.
    pub fn area(&self) -> f64 {
        std::f64::consts::FRAC_PI_4 * self.major_axis_length * self.minor_axis_length
    }
}

/// Variance of a unit-width uniform pixel.
const PIXEL_VARIANCE: f64 = 1.0 / 12.0;

/// Fits the moment-equivalent ellipse to a set of pixel coordinates.
pub fn fit_ellipse(pixels: &[(usize, usize)]) -> Result<EllipseParams> {
    if pixels.is_empty() {
        return Err(Error::InvalidInput(
            "cannot fit an ellipse to an empty pixel set".into(),
        ));
    }
    let n = pixels.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in pixels {
        sx += x as f64;
        sy += y as f64;
    }
    let (cx, cy) = (sx / n, sy / n);

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let uxx = sxx / n + PIXEL_VARIANCE;
    let uyy = syy / n + PIXEL_VARIANCE;
    let uxy = sxy / n;

    Ok(ellipse_from_moments((cx, cy), uxx, uyy, uxy))
}

/// Builds ellipse parameters from normalized central moments (image axes).
pub fn ellipse_from_moments(centroid: (f64, f64), uxx: f64, uyy: f64, uxy: f64) -> EllipseParams {
    let common = ((uxx - uyy) * (uxx - uyy) + 4.0 * uxy * uxy).sqrt();
    let scale = 2.0 * std::f64::consts::SQRT_2;
    let major = scale * (uxx + uyy + common).sqrt();
    let minor = scale * (uxx + uyy - common).max(0.0).sqrt();

    // angle in y-down image axes, then flipped to the y-up convention
    let theta_image = 0.5 * (2.0 * uxy).atan2(uxx - uyy);
    let mut orientation = -theta_image.to_degrees() + 0.0;
    if orientation >= 90.0 {
        orientation -= 180.0;
    }

    let ratio = (minor / major).min(1.0);
    EllipseParams {
        centroid,
        major_axis_length: major,
        minor_axis_length: minor,
        orientation,
        eccentricity: (1.0 - ratio * ratio).sqrt(),
    }
}

/// One labeled connected component with its geometry and tone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StainRegion {
    pub label: u32,
    pub pixel_area: usize,
    pub filled_area: usize,
    pub convex_area: usize,
    pub ellipse: EllipseParams,
    pub solidity: f64,
    /// `90 - orientation`, degrees.
    pub vertical_angle: f64,
    /// Mean inverted-gray intensity.
    pub shade: f64,
    /// Population standard deviation of inverted-gray intensity.
    pub evenness: f64,
}

impl StainRegion {
    /// Impact angle in radians, `asin(minor / major)`.
    pub fn impact_angle(&self) -> f64 {
        crate::stainfeat::impact_angle(&self.ellipse)
    }
}

/// Measures every labeled region. `gray` must be the inverted grayscale
/// image the labels were derived from.
pub fn region_props(labels: &LabelMap, gray: &GrayImage) -> Result<Vec<StainRegion>> {
    if labels.dims() != gray.dims() {
        return Err(Error::DimensionMismatch {
            expected: labels.dims(),
            actual: gray.dims(),
        });
    }
    labels
        .region_pixels()
        .iter()
        .enumerate()
        .map(|(i, pixels)| measure_region(i as u32 + 1, pixels, gray))
        .collect()
}

/// Measures a single region given its pixel list.
pub fn measure_region(
    label: u32,
    pixels: &[(usize, usize)],
    gray: &GrayImage,
) -> Result<StainRegion> {
    let ellipse = fit_ellipse(pixels)?;
    let pixel_area = pixels.len();
    let filled_area = filled_area(pixels);
    let convex_area = convex_area(pixels).max(pixel_area);

    let n = pixel_area as f64;
    let shade = pixels
        .iter()
        .map(|&(x, y)| gray.get(x, y) as f64)
        .sum::<f64>()
        / n;
    let var = pixels
        .iter()
        .map(|&(x, y)| (gray.get(x, y) as f64 - shade).powi(2))
        .sum::<f64>()
        / n;

    Ok(StainRegion {
        label,
        pixel_area,
        filled_area,
        convex_area,
        ellipse,
        solidity: pixel_area as f64 / convex_area as f64,
        vertical_angle: 90.0 - ellipse.orientation,
        shade,
        evenness: var.sqrt(),
    })
}

fn bounding_box(pixels: &[(usize, usize)]) -> (usize, usize, usize, usize) {
    let mut bb = (usize::MAX, usize::MAX, 0, 0);
    for &(x, y) in pixels {
        bb.0 = bb.0.min(x);
        bb.1 = bb.1.min(y);
        bb.2 = bb.2.max(x);
        bb.3 = bb.3.max(y);
    }
    bb
}

/// Pixel count of the region after filling the holes it encloses on its own.
pub fn filled_area(pixels: &[(usize, usize)]) -> usize {
    if pixels.is_empty() {
        return 0;
    }
    let (x0, y0, x1, y1) = bounding_box(pixels);
    // one pixel of padding so the border is always background
    let (w, h) = (x1 - x0 + 3, y1 - y0 + 3);
    let mut mask = BinaryImage::zeros(w, h);
    for &(x, y) in pixels {
        mask.set(x - x0 + 1, y - y0 + 1, true);
    }
    fill_holes(&mask).count_ones()
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of pixel centres (monotone chain), counter-clockwise in
/// image axes, without collinear points.
pub fn convex_hull(pixels: &[(usize, usize)]) -> Vec<(i64, i64)> {
    // only the extreme pixels of each row can be hull vertices
    let mut extremes = std::collections::BTreeMap::<usize, (usize, usize)>::new();
    for &(x, y) in pixels {
        extremes
            .entry(y)
            .and_modify(|e| {
                e.0 = e.0.min(x);
                e.1 = e.1.max(x);
            })
            .or_insert((x, x));
    }
    let mut pts: Vec<(i64, i64)> = extremes
        .iter()
        .flat_map(|(&y, &(lo, hi))| [(lo as i64, y as i64), (hi as i64, y as i64)])
        .collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }

    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Number of pixel centres inside or on the convex hull of the region's
/// pixel centres, by scanline.
pub fn convex_area(pixels: &[(usize, usize)]) -> usize {
    let hull = convex_hull(pixels);
    if hull.is_empty() {
        return 0;
    }
    let y_min = hull.iter().map(|p| p.1).min().unwrap();
    let y_max = hull.iter().map(|p| p.1).max().unwrap();
    let m = hull.len();
    const EPS: f64 = 1e-9;

    let mut total = 0usize;
    for y in y_min..=y_max {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let p = hull[i];
            let q = hull[(i + 1) % m];
            if y < p.1.min(q.1) || y > p.1.max(q.1) {
                continue;
            }
            if p.1 == q.1 {
                lo = lo.min(p.0.min(q.0) as f64);
                hi = hi.max(p.0.max(q.0) as f64);
            } else {
                let x = p.0 as f64 + (y - p.1) as f64 * (q.0 - p.0) as f64 / (q.1 - p.1) as f64;
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if lo <= hi {
            let first = (lo - EPS).ceil() as i64;
            let last = (hi + EPS).floor() as i64;
            if last >= first {
                total += (last - first + 1) as usize;
            }
        }
    }
    total
}

/// Stain filter settings. Thresholds are fixed; only the near-circular
/// criterion can be switched off for sensitivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub drop_near_circular: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            drop_near_circular: true,
        }
    }
}

pub const MAX_REMOVED_ECCENTRICITY: f64 = 0.3;
pub const MIN_IMPACT_ANGLE: f64 = std::f64::consts::PI / 18.0;
pub const MIN_SOLIDITY: f64 = 0.75;
pub const MIN_AREA_TO_FILLED: f64 = 0.95;

/// Why a stain was removed; `None` when it survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NearCircular,
    GrazingImpact,
    LowSolidity,
    MinorCircleExceedsFilled,
    Overlapping,
}

pub fn rejection(stain: &StainRegion, config: &FilterConfig) -> Option<Rejection> {
    let filled = stain.filled_area as f64;
    let minor = stain.ellipse.minor_axis_length;
    if config.drop_near_circular && stain.ellipse.eccentricity <= MAX_REMOVED_ECCENTRICITY {
        Some(Rejection::NearCircular)
    } else if stain.impact_angle() < MIN_IMPACT_ANGLE {
        Some(Rejection::GrazingImpact)
    } else if stain.solidity < MIN_SOLIDITY {
        Some(Rejection::LowSolidity)
    } else if std::f64::consts::PI * (minor / 2.0).powi(2) / filled > 1.0 {
        Some(Rejection::MinorCircleExceedsFilled)
    } else if stain.pixel_area as f64 / filled < MIN_AREA_TO_FILLED {
        Some(Rejection::Overlapping)
    } else {
        None
    }
}

/// Keeps the stains that match none of the removal criteria, in order.
pub fn filter_stains(stains: &[StainRegion], config: &FilterConfig) -> Vec<StainRegion> {
    stains
        .iter()
        .filter(|s| rejection(s, config).is_none())
        .cloned()
        .collect()
}
