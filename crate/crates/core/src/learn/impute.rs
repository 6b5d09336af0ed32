//! Missing-value imputation: zeros, or the mean of the k nearest rows.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Imputation {
    None,
    Zero,
    Knn,
}

impl FromStr for Imputation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Imputation::None),
            "zero" => Ok(Imputation::Zero),
            "knn" => Ok(Imputation::Knn),
            other => Err(Error::Config(format!(
                "unknown imputation '{other}' (knn|zero|none)"
            ))),
        }
    }
}

impl std::fmt::Display for Imputation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Imputation::None => "none",
            Imputation::Zero => "zero",
            Imputation::Knn => "knn",
        })
    }
}

pub fn zero_impute(m: &FeatureMatrix) -> FeatureMatrix {
    let mut out = m.clone();
    for cell in out.rows.iter_mut().flatten() {
        cell.get_or_insert(0.0);
    }
    out
}

/// Euclidean distance over the columns observed in both rows, scaled by
/// `√(columns / shared columns)`; `None` when nothing is shared.
pub fn partial_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            sum += (x - y) * (x - y);
            shared += 1;
        }
    }
    (shared > 0).then(|| (sum * a.len() as f64 / shared as f64).sqrt())
}

/// Replaces each missing cell with the mean of that column over the `k`
/// nearest other rows observing it. Distances use the original matrix,
/// ties go to the lower row index; fewer than `k` donors are used as-is.
/// A row sharing no observed column with any donor gets the column mean.
pub fn knn_impute(m: &FeatureMatrix, k: usize) -> Result<FeatureMatrix> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    for (c, name) in m.names.iter().enumerate() {
        let observed = m.rows.iter().filter(|r| r[c].is_some()).count();
        if observed == 0 && !m.rows.is_empty() {
            return Err(Error::EmptyColumn {
                column: name.clone(),
            });
        }
        let missing = m.rows.len() - observed;
        if missing > 0 && observed < k {
            log::warn!("column '{name}' has only {observed} observed rows for k = {k}");
        }
    }

    let column_means: Vec<f64> = (0..m.n_cols())
        .map(|c| {
            let seen: Vec<f64> = m.rows.iter().filter_map(|r| r[c]).collect();
            seen.iter().sum::<f64>() / seen.len().max(1) as f64
        })
        .collect();

    let rows: Vec<Vec<Option<f64>>> = (0..m.n_rows())
        .into_par_iter()
        .map(|r| {
            let row = &m.rows[r];
            if row.iter().all(Option::is_some) {
                return Ok(row.clone());
            }
            let mut neighbours: Vec<(f64, usize)> = (0..m.n_rows())
                .filter(|&s| s != r)
                .filter_map(|s| partial_distance(row, &m.rows[s]).map(|d| (d, s)))
                .collect();
            neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let mut out = row.clone();
            for (c, cell) in out.iter_mut().enumerate() {
                if cell.is_some() {
                    continue;
                }
                let donors: Vec<f64> = neighbours
                    .iter()
                    .filter_map(|&(_, s)| m.rows[s][c])
                    .take(k)
                    .collect();
                *cell = Some(if donors.is_empty() {
                    column_means[c]
                } else {
                    donors.iter().sum::<f64>() / donors.len() as f64
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    Ok(FeatureMatrix { rows, ..m.clone() })
}
