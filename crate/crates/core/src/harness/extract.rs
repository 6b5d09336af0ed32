//! Per-scan pipeline and its parallel batch form.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::atomic_write;
use super::manifest::{DatasetManifest, ManifestRecord};
use crate::imgproc::{binarize, invert, label_components, to_gray, GrayImage, Threshold};
use crate::learn::FeatureMatrix;
use crate::patternfeat::{
    build_feature_vector, pixels_per_mm, PatternFeatures, PatternMeta, MIN_STAINS,
};
use crate::regions::{filter_stains, region_props, FilterConfig, StainRegion};
use crate::stainfeat::{stain_features, StainFeatures};
use crate::{Error, Mechanism, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub threshold: Threshold,
    pub filter: FilterConfig,
}

/// Everything measured on one scan.
#[derive(Debug, Clone)]
pub struct PatternAnalysis {
    pub threshold: u8,
    /// All labelled regions, before filtering.
    pub regions: Vec<StainRegion>,
    /// Surviving stains; empty when none survive.
    pub stains: Vec<StainFeatures>,
    pub center: Option<(f64, f64)>,
}

/// Inverts, binarizes, labels, measures and filters one grayscale scan.
pub fn analyze_gray(gray: &GrayImage, config: &ExtractConfig) -> Result<PatternAnalysis> {
    let inverted = invert(gray);
    let threshold = crate::imgproc::resolve_threshold(&inverted, config.threshold);
    let labels = label_components(&binarize(&inverted, Threshold::Fixed(threshold)));
    let regions = region_props(&labels, &inverted)?;
    let kept = filter_stains(&regions, &config.filter);
    let (stains, center) = if kept.is_empty() {
        (Vec::new(), None)
    } else {
        let (s, c) = stain_features(&kept)?;
        (s, Some(c))
    };
    Ok(PatternAnalysis {
        threshold,
        regions,
        stains,
        center,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub id: String,
    pub label: Mechanism,
    pub stains: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub id: String,
    pub message: String,
}

/// Every manifest record lands in exactly one of the three lists, each in
/// manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtractionReport {
    pub features: Vec<PatternFeatures>,
    pub skipped: Vec<SkipRecord>,
    pub errors: Vec<ErrorRecord>,
}

enum Outcome {
    Features(PatternFeatures),
    Skipped(SkipRecord),
    Failed(ErrorRecord),
}

fn process(manifest: &DatasetManifest, record: &ManifestRecord, config: &ExtractConfig) -> Outcome {
    let id = record.id();
    let path = manifest.resolve(record);
    let run = || -> Result<Outcome> {
        let image = image::open(&path).map_err(|source| Error::Decode {
            path: path.clone(),
            source,
        })?;
        let gray = to_gray(&image)?;
        let analysis = analyze_gray(&gray, config)?;
        if analysis.stains.len() < MIN_STAINS {
            return Ok(Outcome::Skipped(SkipRecord {
                id: id.clone(),
                label: record.label,
                stains: analysis.stains.len(),
                reason: format!("fewer than {MIN_STAINS} stains after filtering"),
            }));
        }
        let meta = PatternMeta {
            id: id.clone(),
            label: record.label,
            bt_distance_cm: record.bt_distance_cm,
            px_per_mm: pixels_per_mm(record.dpi),
            image_size: gray.dims(),
        };
        Ok(Outcome::Features(build_feature_vector(
            &analysis.stains,
            &meta,
        )?))
    };
    run().unwrap_or_else(|e| {
        log::error!("{id}: {e}");
        Outcome::Failed(ErrorRecord {
            id: id.clone(),
            message: e.to_string(),
        })
    })
}

/// Runs the pipeline on every record in parallel. Unreadable images become
/// error records; the run always completes.
pub fn extract(manifest: &DatasetManifest, config: &ExtractConfig) -> ExtractionReport {
    let outcomes: Vec<Outcome> = manifest
        .records
        .par_iter()
        .map(|r| process(manifest, r, config))
        .collect();
    let mut report = ExtractionReport::default();
    for o in outcomes {
        match o {
            Outcome::Features(f) => report.features.push(f),
            Outcome::Skipped(s) => report.skipped.push(s),
            Outcome::Failed(e) => report.errors.push(e),
        }
    }
    log::info!(
        "extracted {} patterns, skipped {}, failed {}",
        report.features.len(),
        report.skipped.len(),
        report.errors.len()
    );
    report
}

impl ExtractionReport {
    pub fn matrix(&self) -> FeatureMatrix {
        FeatureMatrix::from_patterns(&self.features)
    }

    /// Writes `features.csv`, `skipped.csv` and `errors.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        atomic_write(&dir.join("features.csv"), &self.matrix().to_csv_bytes()?)?;
        atomic_write(
            &dir.join("skipped.csv"),
            &records_csv(&["id", "label", "stains", "reason"], &self.skipped)?,
        )?;
        atomic_write(
            &dir.join("errors.csv"),
            &records_csv(&["id", "message"], &self.errors)?,
        )?;
        Ok(())
    }
}

fn records_csv<T: Serialize>(header: &[&str], records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// One row per stain: centroid, axes, orientation and derived features.
pub fn stain_table_csv(stains: &[StainFeatures]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label",
        "x",
        "y",
        "area",
        "filled_area",
        "major",
        "minor",
        "orientation",
        "solidity",
        "impact_angle",
        "epsilon",
        "distance",
    ])?;
    for s in stains {
        let r = &s.region;
        let (x, y) = r.ellipse.centroid;
        w.write_record([
            r.label.to_string(),
            x.to_string(),
            y.to_string(),
            r.pixel_area.to_string(),
            r.filled_area.to_string(),
            r.ellipse.major_axis_length.to_string(),
            r.ellipse.minor_axis_length.to_string(),
            r.ellipse.orientation.to_string(),
            r.solidity.to_string(),
            s.impact_angle.to_string(),
            s.epsilon.to_string(),
            s.distance.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
