//! Per-class boxplot data for every feature column.

use std::path::Path;

use crate::learn::FeatureMatrix;
use crate::patternfeat::summary::box_stats;
use crate::patternfeat::ClassSummary;
use crate::{Error, Mechanism, Result};

/// One summary per column, in column order.
pub fn class_summaries(m: &FeatureMatrix) -> Result<Vec<ClassSummary>> {
    let rows_of = |class: Mechanism| -> Vec<usize> {
        (0..m.n_rows())
            .filter(|&i| m.labels[i] == class.class())
            .collect()
    };
    let (gun, imp) = (rows_of(Mechanism::Gunshot), rows_of(Mechanism::Impact));
    if gun.is_empty() || imp.is_empty() {
        return Err(Error::InvalidInput(
            "class summary needs at least one pattern per class".into(),
        ));
    }
    let column = |rows: &[usize], c: usize| -> Vec<f64> {
        rows.iter().filter_map(|&i| m.rows[i][c]).collect()
    };
    Ok(m.names
        .iter()
        .enumerate()
        .map(|(c, name)| ClassSummary {
            feature: name.clone(),
            gunshot: box_stats(&column(&gun, c)),
            impact: box_stats(&column(&imp, c)),
        })
        .collect())
}

pub fn write_class_summaries(m: &FeatureMatrix, path: &Path) -> Result<()> {
    super::io::write_json(path, &class_summaries(m)?)
}
