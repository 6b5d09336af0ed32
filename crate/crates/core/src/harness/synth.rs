//! Synthetic spatter patterns: hard-edged filled ellipses on a white page,
//! with the true geometry of every stain recorded.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::io::{atomic_write, write_json};
use super::manifest::{DatasetManifest, ManifestRecord};
use crate::learn::split::derive_seed;
use crate::{Error, Mechanism, Result};

/// Stain shape distribution of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    /// Median of the log-normal stain area, in pixels.
    pub area_median_px: f64,
    pub area_log_sd: f64,
    pub min_area_px: f64,
    pub max_area_px: f64,
    /// Each pattern draws its axis-ratio centre uniformly from this range;
    /// stain ratios are clamped to it.
    pub axis_ratio: (f64, f64),
    /// Relative spread of a stain's ratio around its pattern centre.
    pub axis_ratio_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub patterns_per_class: usize,
    /// Inclusive range of stains per pattern.
    pub stains: (usize, usize),
    pub gunshot: ClassDistribution,
    pub impact: ClassDistribution,
    pub width: usize,
    pub height: usize,
    pub dpi: f64,
    /// Assigned to patterns in turn.
    pub bt_distances_cm: Vec<f64>,
    /// Minimum clearance between the bounding circles of two stains.
    pub min_gap_px: f64,
    /// Placement attempts per stain before giving up.
    pub max_attempts: usize,
    pub ink: [u8; 3],
    pub seed: u64,
}

/// True geometry of one rendered stain. Orientation follows the ellipse
/// fit: degrees counter-clockwise from the x axis with y pointing up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StainTruth {
    pub centroid: (f64, f64),
    pub major_axis_length: f64,
    pub minor_axis_length: f64,
    pub orientation: f64,
}

impl StainTruth {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.major_axis_length * self.minor_axis_length / 4.0
    }

    fn radius(&self) -> f64 {
        self.major_axis_length / 2.0
    }

    /// Whether the centre of pixel `(x, y)` lies inside the ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.orientation.to_radians().sin_cos();
        let dx = x - self.centroid.0;
        let dy = self.centroid.1 - y;
        let u = (dx * c + dy * s) / (self.major_axis_length / 2.0);
        let v = (dy * c - dx * s) / (self.minor_axis_length / 2.0);
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternTruth {
    pub file: String,
    pub label: Mechanism,
    pub bt_distance_cm: f64,
    pub dpi: f64,
    pub stains: Vec<StainTruth>,
}

#[derive(Debug, Clone)]
pub struct SynthPattern {
    pub truth: PatternTruth,
    pub image: RgbImage,
}

impl SynthSpec {
    /// Two classes that differ only in their stain-area distribution; the
    /// gunshot-like class has the smaller stains.
    pub fn two_class(patterns_per_class: usize, seed: u64) -> Self {
        let shape = |median| ClassDistribution {
            area_median_px: median,
            area_log_sd: 0.4,
            min_area_px: 60.0,
            max_area_px: 3000.0,
            axis_ratio: (0.25, 0.9),
            axis_ratio_jitter: 0.1,
        };
        Self {
            patterns_per_class,
            stains: (30, 80),
            gunshot: shape(250.0),
            impact: shape(625.0),
            width: 800,
            height: 800,
            // 0.5 px/mm: 25 mm distance bins are 12.5 px, so the fixed rings
            // fall inside an 800 px page
            dpi: 12.7,
            bt_distances_cm: vec![20.0, 50.0, 100.0, 150.0],
            min_gap_px: 4.0,
            max_attempts: 500,
            ink: [120, 10, 10],
            seed,
        }
    }

    pub fn distribution(&self, class: Mechanism) -> &ClassDistribution {
        match class {
            Mechanism::Gunshot => &self.gunshot,
            Mechanism::Impact => &self.impact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.stains.0 == 0 || self.stains.0 > self.stains.1 {
            return bad(format!(
                "stain count range {:?} must be non-empty and start at 1 or more",
                self.stains
            ));
        }
        if self.width == 0 || self.height == 0 || !(self.dpi > 0.0) {
            return bad("image size and dpi must be positive".into());
        }
        if self.bt_distances_cm.is_empty() || self.bt_distances_cm.iter().any(|d| !(*d >= 0.0)) {
            return bad("at least one non-negative blood-to-target distance is required".into());
        }
        if self.max_attempts == 0 || !(self.min_gap_px >= 0.0) {
            return bad("placement needs a positive attempt limit and a non-negative gap".into());
        }
        for class in [Mechanism::Gunshot, Mechanism::Impact] {
            let d = self.distribution(class);
            let (lo, hi) = d.axis_ratio;
            if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
                return bad(format!(
                    "{class}: axis ratio range ({lo}, {hi}) must lie in (0, 1]"
                ));
            }
            if !(d.area_median_px > 0.0
                && d.area_log_sd >= 0.0
                && (0.0..1.0).contains(&d.axis_ratio_jitter))
            {
                return bad(format!(
                    "{class}: area median must be positive, log sd and jitter in range"
                ));
            }
            // minor = sqrt(4·area·ratio/π) must reach one pixel
            if !(d.min_area_px * lo * 4.0 / std::f64::consts::PI >= 1.0)
                || d.min_area_px > d.max_area_px
            {
                return bad(format!(
                    "{class}: area bounds allow a minor axis under 1 px"
                ));
            }
        }
        Ok(())
    }
}

fn place_stain(
    spec: &SynthSpec,
    d: &ClassDistribution,
    ratio_centre: f64,
    placed: &[StainTruth],
    rng: &mut ChaCha8Rng,
) -> Option<StainTruth> {
    let area_dist = LogNormal::new(d.area_median_px.ln(), d.area_log_sd).expect("validated");
    let (w, h) = (spec.width as f64, spec.height as f64);
    for _ in 0..spec.max_attempts {
        let area = area_dist.sample(rng).clamp(d.min_area_px, d.max_area_px);
        let jitter = 1.0 + d.axis_ratio_jitter * rng.random_range(-1.0..=1.0);
        let ratio = (ratio_centre * jitter).clamp(d.axis_ratio.0, d.axis_ratio.1);
        let major = (4.0 * area / (std::f64::consts::PI * ratio)).sqrt();
        let r = major / 2.0 + 1.0;
        if 2.0 * r >= w - 1.0 || 2.0 * r >= h - 1.0 {
            continue;
        }
        let stain = StainTruth {
            centroid: (
                rng.random_range(r..w - 1.0 - r),
                rng.random_range(r..h - 1.0 - r),
            ),
            major_axis_length: major,
            minor_axis_length: major * ratio,
            orientation: rng.random_range(-90.0..90.0),
        };
        let clear = placed.iter().all(|o| {
            let gap = (stain.centroid.0 - o.centroid.0).hypot(stain.centroid.1 - o.centroid.1);
            gap > stain.radius() + o.radius() + spec.min_gap_px
        });
        if clear {
            return Some(stain);
        }
    }
    None
}

pub fn render(stains: &[StainTruth], width: usize, height: usize, ink: [u8; 3]) -> RgbImage {
    let mut img = RgbImage::from_pixel(width as u32, height as u32, Rgb([255, 255, 255]));
    for s in stains {
        let r = s.radius() + 1.0;
        let x0 = (s.centroid.0 - r).floor().max(0.0) as usize;
        let y0 = (s.centroid.1 - r).floor().max(0.0) as usize;
        let x1 = ((s.centroid.0 + r).ceil() as usize).min(width - 1);
        let y1 = ((s.centroid.1 + r).ceil() as usize).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if s.contains(x as f64, y as f64) {
                    img.put_pixel(x as u32, y as u32, Rgb(ink));
                }
            }
        }
    }
    img
}

fn generate_pattern(spec: &SynthSpec, index: usize) -> Result<SynthPattern> {
    let (label, within) = if index < spec.patterns_per_class {
        (Mechanism::Gunshot, index)
    } else {
        (Mechanism::Impact, index - spec.patterns_per_class)
    };
    let d = spec.distribution(label);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, index as u64));
    let count = rng.random_range(spec.stains.0..=spec.stains.1);
    let ratio_centre = rng.random_range(d.axis_ratio.0..=d.axis_ratio.1);
    let mut stains = Vec::with_capacity(count);
    for k in 0..count {
        let stain = place_stain(spec, d, ratio_centre, &stains, &mut rng).ok_or_else(|| {
            Error::Config(format!(
                "pattern {index}: no overlap-free position for stain {k} after {} attempts",
                spec.max_attempts
            ))
        })?;
        stains.push(stain);
    }
    let image = render(&stains, spec.width, spec.height, spec.ink);
    Ok(SynthPattern {
        truth: PatternTruth {
            file: format!("{label}_{within:03}.png"),
            label,
            bt_distance_cm: spec.bt_distances_cm[index % spec.bt_distances_cm.len()],
            dpi: spec.dpi,
            stains,
        },
        image,
    })
}

/// Generates `patterns_per_class` gunshot patterns followed by as many
/// impact patterns. Pattern `i` draws from its own stream seeded by
/// `derive_seed(seed, i)`.
pub fn synth_generate(spec: &SynthSpec) -> Result<Vec<SynthPattern>> {
    spec.validate()?;
    use rayon::prelude::*;
    (0..2 * spec.patterns_per_class)
        .into_par_iter()
        .map(|i| generate_pattern(spec, i))
        .collect()
}

/// Writes `images/*.png`, `manifest.csv` and `ground_truth.json` into `dir`
/// and returns the manifest.
pub fn write_synth(patterns: &[SynthPattern], dir: &Path) -> Result<DatasetManifest> {
    let mut records = Vec::with_capacity(patterns.len());
    for p in patterns {
        let rel = PathBuf::from("images").join(&p.truth.file);
        let mut png = Vec::new();
        DynamicImage::ImageRgb8(p.image.clone())
            .write_to(&mut Cursor::new(&mut png), ImageFormat::Png)?;
        atomic_write(&dir.join(&rel), &png)?;
        records.push(ManifestRecord {
            path: rel,
            label: p.truth.label,
            bt_distance_cm: p.truth.bt_distance_cm,
            dpi: p.truth.dpi,
        });
    }
    let manifest = DatasetManifest::new(dir, records)?;
    atomic_write(&dir.join("manifest.csv"), &manifest.to_csv_bytes()?)?;
    let truth: Vec<&PatternTruth> = patterns.iter().map(|p| &p.truth).collect();
    write_json(&dir.join("ground_truth.json"), &truth)?;
    Ok(manifest)
}
