//! Test-set accuracy, overall and within blood-to-target distance limits.

use serde::{Deserialize, Serialize};

use super::dataset::FeatureMatrix;
use super::model::TreeEnsemble;

/// Distance limits (cm) of the stratified accuracies.
pub const DEFAULT_BT_THRESHOLDS: [f64; 3] = [30.0, 60.0, 120.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAccuracy {
    pub max_distance_cm: f64,
    pub n: usize,
    /// `None` when no test row falls within the limit.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEvaluation {
    pub fit: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub overall: f64,
    pub subsets: Vec<SubsetAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub fits: Vec<FitEvaluation>,
    pub mean_overall: f64,
    /// Mean over the fits where the subset was non-empty.
    pub mean_subsets: Vec<SubsetAccuracy>,
}

fn accuracy(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

/// Accuracy of `model` on `test`; subset `d` covers rows with
/// `bt_distance <= d`.
pub fn evaluate(model: &TreeEnsemble, test: &FeatureMatrix, thresholds: &[f64]) -> FitEvaluation {
    let hits: Vec<bool> = test
        .rows
        .iter()
        .zip(&test.labels)
        .map(|(r, &l)| model.predict(r) == l)
        .collect();
    let subsets = thresholds
        .iter()
        .map(|&limit| {
            let within: Vec<bool> = hits
                .iter()
                .zip(&test.bt_distance)
                .filter(|(_, &d)| d <= limit)
                .map(|(&h, _)| h)
                .collect();
            SubsetAccuracy {
                max_distance_cm: limit,
                n: within.len(),
                accuracy: accuracy(within.iter().filter(|&&h| h).count(), within.len()),
            }
        })
        .collect();
    FitEvaluation {
        fit: 0,
        seed: 0,
        n_train: 0,
        n_test: hits.len(),
        overall: accuracy(hits.iter().filter(|&&h| h).count(), hits.len()).unwrap_or(0.0),
        subsets,
    }
}

impl EvaluationReport {
    pub fn from_fits(fits: Vec<FitEvaluation>) -> Self {
        let mean_overall = if fits.is_empty() {
            0.0
        } else {
            fits.iter().map(|f| f.overall).sum::<f64>() / fits.len() as f64
        };
        let limits: Vec<f64> = fits
            .first()
            .map(|f| f.subsets.iter().map(|s| s.max_distance_cm).collect())
            .unwrap_or_default();
        let mean_subsets = limits
            .iter()
            .enumerate()
            .map(|(j, &limit)| {
                let present: Vec<f64> = fits.iter().filter_map(|f| f.subsets[j].accuracy).collect();
                SubsetAccuracy {
                    max_distance_cm: limit,
                    n: present.len(),
                    accuracy: (!present.is_empty())
                        .then(|| present.iter().sum::<f64>() / present.len() as f64),
                }
            })
            .collect();
        Self {
            fits,
            mean_overall,
            mean_subsets,
        }
    }

    /// One row per fit: `fit,seed,n_train,n_test,overall,acc_le_<d>...`.
    pub fn to_csv_bytes(&self) -> crate::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "fit".to_string(),
            "seed".into(),
            "n_train".into(),
            "n_test".into(),
            "overall".into(),
        ];
        header.extend(
            self.mean_subsets
                .iter()
                .map(|s| format!("acc_le_{}", s.max_distance_cm)),
        );
        w.write_record(&header)?;
        for f in &self.fits {
            let mut rec = vec![
                f.fit.to_string(),
                f.seed.to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.overall.to_string(),
            ];
            rec.extend(
                f.subsets
                    .iter()
                    .map(|s| s.accuracy.map(|a| a.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}
