//! Per-class five-number summaries with 1.5·IQR outliers (boxplot data).

use serde::{Deserialize, Serialize};

use super::registry::{PatternFeatures, FEATURE_NAMES};
use crate::{Error, Mechanism, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub feature: String,
    /// `None` when the feature is missing for every gunshot pattern.
    pub gunshot: Option<BoxStats>,
    pub impact: Option<BoxStats>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    Some(BoxStats {
        count: v.len(),
        min: v[0],
        q1,
        median: quantile(&v, 0.5),
        q3,
        max: v[v.len() - 1],
        outliers: v.iter().copied().filter(|&x| x < lo || x > hi).collect(),
    })
}

pub fn class_summary(features: &[PatternFeatures], name: &str) -> Result<ClassSummary> {
    let col = FEATURE_NAMES
        .iter()
        .position(|&n| n == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown feature '{name}'")))?;
    let mut stats = [Mechanism::Gunshot, Mechanism::Impact].map(|class| {
        let rows: Vec<&PatternFeatures> = features.iter().filter(|f| f.label == class).collect();
        let values: Vec<f64> = rows.iter().filter_map(|f| f.values[col]).collect();
        (rows.len(), box_stats(&values))
    });
    if stats.iter().any(|(n, _)| *n == 0) {
        return Err(Error::InvalidInput(
            "class summary needs at least one pattern per class".into(),
        ));
    }
    Ok(ClassSummary {
        feature: name.to_string(),
        gunshot: stats[0].1.take(),
        impact: stats[1].1.take(),
    })
}
