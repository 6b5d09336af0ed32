//! Repeated train/test fits and the stability importance score: the share
//! of fits in which a feature ranks among the ten most important.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::FeatureMatrix;
use super::evaluate::{evaluate, EvaluationReport, FitEvaluation};
use super::model::{train, ModelParams};
use super::split::{derive_seed, split_train_test};
use crate::{Error, Result};

pub const TOP_K: usize = 10;
pub const TRAIN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SisReport {
    pub top_k: usize,
    pub fits: usize,
    pub feature_names: Vec<String>,
    /// Fits in which each feature made the top `k`.
    pub counts: Vec<usize>,
    pub scores: Vec<f64>,
}

impl SisReport {
    pub fn from_counts(
        feature_names: Vec<String>,
        counts: Vec<usize>,
        fits: usize,
        top_k: usize,
    ) -> Self {
        let scores = counts.iter().map(|&c| c as f64 / fits as f64).collect();
        Self {
            top_k,
            fits,
            feature_names,
            counts,
            scores,
        }
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.scores[i])
    }

    /// `Σ counts / fits`, equal to `top_k` whenever there are at least
    /// `top_k` features.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.fits as f64
    }

    /// Feature indices by descending count, ties in column order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.counts.len()).collect();
        idx.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        idx
    }

    /// `rank,feature,count,sis` in ranking order.
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "feature", "count", "sis"])?;
        for (rank, i) in self.ranking().into_iter().enumerate() {
            w.write_record([
                (rank + 1).to_string(),
                self.feature_names[i].clone(),
                self.counts[i].to_string(),
                self.scores[i].to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Indices of the `k` largest importances; equal importances rank in
/// column order.
pub fn top_k(importance: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importance.len()).collect();
    idx.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

struct FitOutcome {
    evaluation: FitEvaluation,
    top: Vec<usize>,
}

fn one_fit(
    m: &FeatureMatrix,
    params: &ModelParams,
    fit: usize,
    root_seed: u64,
    thresholds: &[f64],
) -> Result<FitOutcome> {
    let seed = derive_seed(root_seed, fit as u64);
    let (train_idx, test_idx) = split_train_test(m.n_rows(), TRAIN_FRACTION, seed)?;
    let model = train(&m.subset(&train_idx), params, derive_seed(seed, 1))?;
    let mut evaluation = evaluate(&model, &m.subset(&test_idx), thresholds);
    evaluation.fit = fit;
    evaluation.seed = seed;
    evaluation.n_train = train_idx.len();
    Ok(FitOutcome {
        evaluation,
        top: top_k(&model.importance, TOP_K),
    })
}

/// Runs `reps` independent 75/25 fits; fit `r` uses `derive_seed(seed, r)`.
/// Results are ordered by fit index whatever the scheduling.
pub fn run_fits(
    m: &FeatureMatrix,
    params: &ModelParams,
    reps: usize,
    seed: u64,
    thresholds: &[f64],
) -> Result<(EvaluationReport, SisReport)> {
    if reps == 0 {
        return Err(Error::Config("at least one fit is required".into()));
    }
    if m.n_cols() < TOP_K {
        return Err(Error::InvalidInput(format!(
            "importance ranking needs at least {TOP_K} features, got {}",
            m.n_cols()
        )));
    }
    params.validate()?;
    let outcomes: Vec<FitOutcome> = (0..reps)
        .into_par_iter()
        .map(|r| one_fit(m, params, r, seed, thresholds))
        .collect::<Result<_>>()?;

    let mut counts = vec![0usize; m.n_cols()];
    for o in &outcomes {
        for &f in &o.top {
            counts[f] += 1;
        }
    }
    let evaluation =
        EvaluationReport::from_fits(outcomes.into_iter().map(|o| o.evaluation).collect());
    Ok((
        evaluation,
        SisReport::from_counts(m.names.clone(), counts, reps, TOP_K),
    ))
}

pub fn sis(m: &FeatureMatrix, params: &ModelParams, reps: usize, seed: u64) -> Result<SisReport> {
    run_fits(m, params, reps, seed, &[]).map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_breaks_ties_by_column() {
        let imp = [0.0, 3.0, 1.0, 3.0, 0.0];
        assert_eq!(top_k(&imp, 3), vec![1, 3, 2]);
        assert_eq!(top_k(&imp, 10), vec![1, 3, 2, 0, 4]);
    }

    #[test]
    fn report_total_and_ranking() {
        let names: Vec<String> = (0..12).map(|i| format!("f{i}")).collect();
        let mut counts = vec![7usize; 10];
        counts.extend([0, 0]);
        counts.swap(0, 11);
        let r = SisReport::from_counts(names, counts, 7, 10);
        assert_eq!(r.total(), 10.0);
        assert_eq!(r.ranking()[..2], [1, 2]);
        assert_eq!(r.score("f11"), Some(1.0));
        assert_eq!(r.score("f0"), Some(0.0));
    }
}
