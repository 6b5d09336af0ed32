use serde::{Deserialize, Serialize};

use super::bins::{busiest_bin, BinKind, BinningScheme};
use super::circular::{incident_vector, scatter_summary};
use super::consolidate::{mean, sd};
use crate::stainfeat::{median, StainFeatures};
use crate::{Error, Mechanism, Result};

pub const FEATURE_COUNT: usize = 48;

/// Column order of every pattern feature vector.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "num_stains",
    "mean_maj_length",
    "mean_min_length",
    "mean_area",
    "mean_ratio_dis",
    "sd_ratio_dis",
    "sd_epsilon",
    "sd_impact_angle",
    "mean_solidity",
    "sd_solidity",
    "num_large_1",
    "num_large_75",
    "ratio_large_1",
    "ratio_large_75",
    "fract1_ring_5_15",
    "fract1_ring_15_25",
    "fract1_ring_25_35",
    "fract75_ring_5_15",
    "fract75_ring_15_25",
    "fract75_ring_25_35",
    "adp_fract1_ring_15_25",
    "adp_fract1_ring_25_31",
    "adp_fract75_ring_15_25",
    "adp_fract75_ring_25_31",
    "num1_rec_5_15",
    "num1_rec_15_25",
    "num1_rec_25_35",
    "num75_rec_5_15",
    "num75_rec_15_25",
    "num75_rec_25_35",
    "fract1_rec_5_15",
    "fract1_rec_15_25",
    "fract1_rec_25_35",
    "fract75_rec_5_15",
    "fract75_rec_15_25",
    "fract75_rec_25_35",
    "i",
    "adp_i",
    "rec_i",
    "m",
    "adp_m",
    "rec_m",
    "rec_bin_ratio",
    "rec_adp_bin_ratio",
    "spheri_ratio",
    "spheri_det",
    "mean_shade",
    "mean_evenness",
];

/// Fixed bin width in millimetres.
pub const FIXED_BIN_MM: f64 = 25.0;
/// The adaptive bin width is the median stain distance over this.
pub const ADAPTIVE_DIVISOR: f64 = 20.0;
/// Radii (mm) of the circles whose areas define "large" stains.
pub const LARGE_RADII_MM: [f64; 2] = [0.1, 0.075];
/// Bin ranges `[lo, hi)` used by the fixed ring/rectangular features.
const FIXED_RANGES: [(usize, usize); 3] = [(5, 15), (15, 25), (25, 35)];
const ADAPTIVE_RANGES: [(usize, usize); 2] = [(15, 25), (25, 31)];

pub const MIN_STAINS: usize = 2;

/// Pixel-area thresholds for the "1" (0.1 mm) and "75" (0.075 mm) sizes.
pub fn large_stain_thresholds(px_per_mm: f64) -> [f64; 2] {
    LARGE_RADII_MM.map(|r| std::f64::consts::PI * (r * px_per_mm).powi(2))
}

/// Identity and scan metadata of one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMeta {
    pub id: String,
    pub label: Mechanism,
    pub bt_distance_cm: f64,
    pub px_per_mm: f64,
    /// `(width, height)` in pixels.
    pub image_size: (usize, usize),
}

/// Named feature vector of one pattern; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternFeatures {
    pub id: String,
    pub label: Mechanism,
    pub bt_distance_cm: f64,
    pub px_per_mm: f64,
    pub values: Vec<Option<f64>>,
}

impl PatternFeatures {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .and_then(|i| self.values[i])
    }
}

struct Row {
    values: [Option<f64>; FEATURE_COUNT],
}

impl Row {
    fn set(&mut self, name: &str, value: Option<f64>) {
        let i = FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .unwrap_or_else(|| panic!("unregistered feature {name}"));
        self.values[i] = value.filter(|v| v.is_finite());
    }
}

/// Large-stain count and total among stains whose bin lies in `[lo, hi)`.
fn tally(bins: &[Option<usize>], large: &[bool], (lo, hi): (usize, usize)) -> (usize, usize) {
    bins.iter()
        .zip(large)
        .filter(|(b, _)| b.is_some_and(|j| (lo..hi).contains(&j)))
        .fold((0, 0), |(l, n), (_, &is_large)| {
            (l + is_large as usize, n + 1)
        })
}

fn fraction((large, total): (usize, usize)) -> Option<f64> {
    (total > 0).then(|| large as f64 / total as f64)
}

/// Consolidates the filtered stains of one pattern into its feature vector.
pub fn build_feature_vector(
    stains: &[StainFeatures],
    meta: &PatternMeta,
) -> Result<PatternFeatures> {
    if stains.len() < MIN_STAINS {
        return Err(Error::TooFewStains {
            found: stains.len(),
            required: MIN_STAINS,
        });
    }
    if !(meta.px_per_mm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "resolution must be positive, got {}",
            meta.px_per_mm
        )));
    }
    let mut row = Row {
        values: [None; FEATURE_COUNT],
    };
    let col = |f: fn(&StainFeatures) -> f64| stains.iter().map(f).collect::<Vec<f64>>();

    let areas = col(|s| s.region.pixel_area as f64);
    let ratio_dis: Vec<f64> = stains.iter().filter_map(|s| s.ratio_distance).collect();
    let solidity = col(|s| s.region.solidity);

    row.set("num_stains", Some(stains.len() as f64));
    row.set(
        "mean_maj_length",
        mean(&col(|s| s.region.ellipse.major_axis_length)),
    );
    row.set(
        "mean_min_length",
        mean(&col(|s| s.region.ellipse.minor_axis_length)),
    );
    row.set("mean_area", mean(&areas));
    row.set("mean_ratio_dis", mean(&ratio_dis));
    row.set("sd_ratio_dis", sd(&ratio_dis));
    row.set("sd_epsilon", sd(&col(|s| s.epsilon)));
    row.set("sd_impact_angle", sd(&col(|s| s.impact_angle)));
    row.set("mean_solidity", mean(&solidity));
    row.set("sd_solidity", sd(&solidity));

    let thresholds = large_stain_thresholds(meta.px_per_mm);
    let large: [Vec<bool>; 2] = thresholds.map(|t| areas.iter().map(|&a| a > t).collect());
    for (size, flags) in ["1", "75"].iter().zip(&large) {
        let n = flags.iter().filter(|&&b| b).count();
        row.set(&format!("num_large_{size}"), Some(n as f64));
        row.set(
            &format!("ratio_large_{size}"),
            Some(n as f64 / stains.len() as f64),
        );
    }

    let centroids: Vec<(f64, f64)> = stains.iter().map(|s| s.centroid()).collect();
    let pattern_center = crate::stainfeat::pattern_centroid(&centroids)?;
    let image_center = (
        meta.image_size.0 as f64 / 2.0,
        meta.image_size.1 as f64 / 2.0,
    );
    let fixed_width = FIXED_BIN_MM * meta.px_per_mm;

    let rings = BinningScheme {
        kind: BinKind::Annulus,
        width: fixed_width,
        center: pattern_center,
    };
    let (ring_bins, ring_counts) = rings.assign(&centroids);
    let rects = BinningScheme {
        kind: BinKind::Rectangular,
        width: fixed_width,
        center: image_center,
    };
    let (rect_bins, rect_counts) = rects.assign(&centroids);

    let median_distance = median(&col(|s| s.distance)).unwrap_or(0.0);
    let adaptive = (median_distance > 0.0).then(|| {
        BinningScheme {
            kind: BinKind::Annulus,
            width: median_distance / ADAPTIVE_DIVISOR,
            center: pattern_center,
        }
        .assign(&centroids)
    });

    for (size, flags) in ["1", "75"].iter().zip(&large) {
        for range in FIXED_RANGES {
            let suffix = format!("{}_{}", range.0, range.1);
            row.set(
                &format!("fract{size}_ring_{suffix}"),
                fraction(tally(&ring_bins, flags, range)),
            );
            let rec = tally(&rect_bins, flags, range);
            row.set(&format!("num{size}_rec_{suffix}"), Some(rec.0 as f64));
            row.set(&format!("fract{size}_rec_{suffix}"), fraction(rec));
        }
        for range in ADAPTIVE_RANGES {
            let value = adaptive
                .as_ref()
                .and_then(|(bins, _)| fraction(tally(bins, flags, range)));
            row.set(
                &format!("adp_fract{size}_ring_{}_{}", range.0, range.1),
                value,
            );
        }
    }

    let ring_peak = busiest_bin(&ring_counts);
    let adp_peak = adaptive
        .as_ref()
        .and_then(|(_, counts)| busiest_bin(counts));
    let rect_peak = busiest_bin(&rect_counts);
    let index = |p: Option<(usize, usize)>| p.map(|(i, _)| i as f64);
    let population = |p: Option<(usize, usize)>| p.map_or(0.0, |(_, m)| m as f64);
    row.set("i", index(ring_peak));
    row.set("adp_i", index(adp_peak));
    row.set("rec_i", index(rect_peak));
    row.set("m", Some(population(ring_peak)));
    row.set("adp_m", adaptive.as_ref().map(|_| population(adp_peak)));
    row.set("rec_m", Some(population(rect_peak)));
    let over_rec = |num: Option<f64>| num.zip(index(rect_peak)).map(|(a, b)| a / b);
    row.set("rec_bin_ratio", over_rec(index(ring_peak)));
    row.set("rec_adp_bin_ratio", over_rec(index(adp_peak)));

    let directions: Vec<[f64; 3]> = stains
        .iter()
        .map(|s| incident_vector(s.impact_angle, s.region.ellipse.orientation.to_radians()))
        .collect();
    if let Some(scatter) = scatter_summary(&directions) {
        row.set("spheri_ratio", scatter.spheri_ratio);
        row.set("spheri_det", Some(scatter.spheri_det));
    }

    row.set("mean_shade", mean(&col(|s| s.region.shade)));
    row.set("mean_evenness", mean(&col(|s| s.region.evenness)));

    Ok(PatternFeatures {
        id: meta.id.clone(),
        label: meta.label,
        bt_distance_cm: meta.bt_distance_cm,
        px_per_mm: meta.px_per_mm,
        values: row.values.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::{EllipseParams, StainRegion};
    use crate::stainfeat::stain_features;

    fn region(cx: f64, cy: f64, area: usize, ratio: f64, orientation: f64) -> StainRegion {
        let major = (4.0 * area as f64 / (std::f64::consts::PI * ratio)).sqrt();
        let minor = major * ratio;
        StainRegion {
            label: 1,
            pixel_area: area,
            filled_area: area,
            convex_area: area,
            ellipse: EllipseParams {
                centroid: (cx, cy),
                major_axis_length: major,
                minor_axis_length: minor,
                orientation,
                eccentricity: (1.0 - ratio * ratio).sqrt(),
            },
            solidity: 1.0,
            vertical_angle: 90.0 - orientation,
            shade: 180.0,
            evenness: 2.0,
        }
    }

    fn meta(px_per_mm: f64) -> PatternMeta {
        PatternMeta {
            id: "p".into(),
            label: Mechanism::Gunshot,
            bt_distance_cm: 30.0,
            px_per_mm,
            image_size: (1000, 1000),
        }
    }

    fn features(regions: &[StainRegion], px_per_mm: f64) -> PatternFeatures {
        let (stains, _) = stain_features(regions).unwrap();
        build_feature_vector(&stains, &meta(px_per_mm)).unwrap()
    }

    #[test]
    fn registry_is_unique_and_complete() {
        let mut names = FEATURE_NAMES.to_vec();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 48);
    }

    #[test]
    fn thresholds_at_600_dpi() {
        let [t1, t75] = large_stain_thresholds(super::super::pixels_per_mm(600.0));
        // π·(0.1·23.622)² and π·(0.075·23.622)²
        assert!((t1 - 17.5300).abs() < 1e-3, "{t1}");
        assert!((t75 - 9.8606).abs() < 1e-3, "{t75}");
    }

    #[test]
    fn five_stain_pattern() {
        let regions: Vec<_> = (0..5)
            .map(|i| region(100.0 + 10.0 * i as f64, 500.0, 50 + i, 0.5, 20.0))
            .collect();
        let f = features(&regions, 1.0);
        assert_eq!(f.get("num_stains"), Some(5.0));
        assert_eq!(f.get("mean_area"), Some(52.0));
        assert_eq!(f.get("mean_solidity"), Some(1.0));
        assert_eq!(f.get("sd_solidity"), Some(0.0));
        assert_eq!(f.get("mean_shade"), Some(180.0));
        assert_eq!(f.get("mean_evenness"), Some(2.0));
        assert_eq!(f.values.len(), FEATURE_COUNT);
    }

    #[test]
    fn small_stains_are_not_large() {
        // 600 dpi: thresholds ≈ 17.5 and 9.9 px
        let regions: Vec<_> = (0..4)
            .map(|i| region(10.0 * i as f64, 0.0, 8, 0.5, 0.0))
            .collect();
        let f = features(&regions, 600.0 / 25.4);
        for name in [
            "num_large_1",
            "num_large_75",
            "ratio_large_1",
            "ratio_large_75",
        ] {
            assert_eq!(f.get(name), Some(0.0), "{name}");
        }
    }

    #[test]
    fn empty_rings_are_missing() {
        // px_per_mm 1 → 25 px rings; all stains within ring 1
        let regions: Vec<_> = (0..4)
            .map(|i| region(500.0 + i as f64, 500.0, 30, 0.5, 0.0))
            .collect();
        let f = features(&regions, 1.0);
        assert_eq!(f.get("fract1_ring_15_25"), None);
        assert_eq!(f.get("fract1_ring_5_15"), None);
        assert_eq!(f.get("num1_rec_5_15"), Some(0.0));
        assert_eq!(f.get("fract1_rec_5_15"), None);
        assert_eq!(f.get("i"), Some(1.0));
        assert_eq!(f.get("m"), Some(4.0));
        assert_eq!(f.get("rec_i"), Some(1.0));
        assert_eq!(f.get("rec_bin_ratio"), Some(1.0));
    }

    #[test]
    fn local_counts_match_brute_force() {
        // stains spread vertically so fixed rect bins 5.. are populated
        let regions: Vec<_> = (0..60)
            .map(|i| {
                region(
                    500.0 + (i % 7) as f64 * 3.0,
                    5.0 + 16.5 * i as f64,
                    10 + (i * 7) % 40,
                    0.4,
                    10.0,
                )
            })
            .collect();
        let ppm = 1.0;
        let f = features(&regions, ppm);
        let [t1, _] = large_stain_thresholds(ppm);
        let cy = 500.0;
        for (lo, hi) in FIXED_RANGES {
            let mut n_large = 0;
            let mut n_all = 0;
            for r in &regions {
                let off = (r.ellipse.centroid.1 - cy).abs();
                let bin = (off / 25.0).floor() as usize + 1;
                if bin >= lo && bin < hi {
                    n_all += 1;
                    if r.pixel_area as f64 > t1 {
                        n_large += 1;
                    }
                }
            }
            assert_eq!(f.get(&format!("num1_rec_{lo}_{hi}")), Some(n_large as f64));
            let expected = (n_all > 0).then(|| n_large as f64 / n_all as f64);
            assert_eq!(f.get(&format!("fract1_rec_{lo}_{hi}")), expected);
        }
        for name in FEATURE_NAMES
            .iter()
            .filter(|n| n.contains("fract") || n.starts_with("ratio"))
        {
            if let Some(v) = f.get(name) {
                assert!((0.0..=1.0).contains(&v), "{name} = {v}");
            }
        }
    }

    #[test]
    fn coincident_stains_have_missing_ratio_distance() {
        let regions = vec![
            region(5.0, 5.0, 30, 0.5, 0.0),
            region(5.0, 5.0, 40, 0.5, 0.0),
        ];
        let f = features(&regions, 1.0);
        assert_eq!(f.get("mean_ratio_dis"), None);
        assert_eq!(f.get("adp_i"), None);
        assert_eq!(f.get("adp_m"), None);
        assert_eq!(f.get("adp_fract1_ring_15_25"), None);
    }

    #[test]
    fn too_few_stains_rejected() {
        let (stains, _) = stain_features(&[region(0.0, 0.0, 30, 0.5, 0.0)]).unwrap();
        assert!(matches!(
            build_feature_vector(&stains, &meta(1.0)),
            Err(Error::TooFewStains {
                found: 1,
                required: 2
            })
        ));
    }
}
