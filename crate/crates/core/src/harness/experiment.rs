//! Imputation, repeated fits, evaluation and importance ranking driven by
//! one validated configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::extract::{extract, ExtractConfig};
use super::io::{atomic_write, write_json};
use super::manifest::DatasetManifest;
use crate::learn::grid::{default_grid, grid_search};
use crate::learn::impute::{knn_impute, zero_impute, Imputation};
use crate::learn::model::{ModelKind, ModelParams};
use crate::learn::split::derive_seed;
use crate::learn::{run_fits, EvaluationReport, FeatureMatrix, SisReport, DEFAULT_BT_THRESHOLDS};
use crate::{Error, Result};

/// Fold count of the optional hyperparameter search.
pub const GRID_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Defaults for the model kind when absent.
    pub params: Option<ModelParams>,
    /// Boosting defaults to none; the forest needs an explicit choice.
    pub imputation: Option<Imputation>,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    pub bt_thresholds_cm: Vec<f64>,
    /// Replace `params` by a cross-validated search over the default grid.
    pub tune: bool,
}

impl ExperimentConfig {
    pub fn new(model: ModelKind, imputation: Option<Imputation>, reps: usize, seed: u64) -> Self {
        Self {
            model,
            params: None,
            imputation,
            k: 10,
            reps,
            seed,
            bt_thresholds_cm: DEFAULT_BT_THRESHOLDS.to_vec(),
            tune: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if let Some(p) = &self.params {
            if p.kind() != self.model {
                return Err(Error::Config(format!(
                    "{} parameters given for a {} model",
                    p.kind(),
                    self.model
                )));
            }
            p.validate()?;
        }
        if self.model == ModelKind::Forest
            && matches!(self.imputation, None | Some(Imputation::None))
        {
            return Err(Error::Config(
                "the forest cannot handle missing values; choose --impute knn or zero".into(),
            ));
        }
        if self.resolved_imputation() == Imputation::Knn && self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.bt_thresholds_cm.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("distance thresholds must be finite".into()));
        }
        Ok(())
    }

    pub fn resolved_imputation(&self) -> Imputation {
        self.imputation.unwrap_or(Imputation::None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub params: ModelParams,
    pub imputation: Imputation,
    /// Cells filled in before the fits.
    pub imputed_cells: usize,
    pub evaluation: EvaluationReport,
    pub sis: SisReport,
}

/// Reads a feature CSV, or extracts features from a manifest. Extraction
/// errors are logged and the failed records left out.
pub fn load_features(path: &Path, extract_config: &ExtractConfig) -> Result<FeatureMatrix> {
    let is_feature_csv = {
        let head = std::fs::read_to_string(path)?;
        head.starts_with("pattern_id,")
    };
    if is_feature_csv {
        return FeatureMatrix::read_csv(std::fs::File::open(path)?);
    }
    let report = extract(&DatasetManifest::load(path)?, extract_config);
    for e in &report.errors {
        log::warn!("left out {}: {}", e.id, e.message);
    }
    Ok(report.matrix())
}

/// Imputes once on the whole matrix (imputation never sees labels), then
/// runs `reps` seeded train/test fits.
pub fn run_experiment(m: &FeatureMatrix, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let imputation = config.resolved_imputation();
    let data = match imputation {
        Imputation::None => m.clone(),
        Imputation::Zero => zero_impute(m),
        Imputation::Knn => knn_impute(m, config.k)?,
    };
    let imputed_cells = m.missing_count() - data.missing_count();

    let params = if config.tune {
        let grid = default_grid(config.model);
        let result = grid_search(&data, &grid, GRID_FOLDS, derive_seed(config.seed, u64::MAX))?;
        log::info!(
            "grid search picked point {} (cv accuracy {:.4})",
            result.best_index,
            result.scores[result.best_index]
        );
        result.best
    } else {
        config
            .params
            .unwrap_or_else(|| ModelParams::default_for(config.model))
    };

    let (evaluation, sis) = run_fits(
        &data,
        &params,
        config.reps,
        config.seed,
        &config.bt_thresholds_cm,
    )?;
    Ok(ExperimentOutcome {
        config: config.clone(),
        params,
        imputation,
        imputed_cells,
        evaluation,
        sis,
    })
}

/// Writes `experiment.json`, `evaluation.json`, `evaluation.csv`,
/// `sis.json` and `sis.csv` into `dir`.
pub fn write_experiment(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Header<'a> {
        config: &'a ExperimentConfig,
        params: &'a ModelParams,
        imputation: Imputation,
        imputed_cells: usize,
    }
    let files = [
        "experiment.json",
        "evaluation.json",
        "evaluation.csv",
        "sis.json",
        "sis.csv",
    ]
    .map(|f| dir.join(f));
    write_json(
        &files[0],
        &Header {
            config: &outcome.config,
            params: &outcome.params,
            imputation: outcome.imputation,
            imputed_cells: outcome.imputed_cells,
        },
    )?;
    write_json(&files[1], &outcome.evaluation)?;
    atomic_write(&files[2], &outcome.evaluation.to_csv_bytes()?)?;
    write_json(&files[3], &outcome.sis)?;
    atomic_write(&files[4], &outcome.sis.to_csv_bytes()?)?;
    Ok(files.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::boost::BoostParams;

    fn matrix(missing: bool) -> FeatureMatrix {
        let names: Vec<String> = (0..12).map(|c| format!("f{c}")).collect();
        let rows = (0..24)
            .map(|i| {
                (0..12)
                    .map(|c| {
                        if missing && c == 5 && i % 4 == 0 {
                            None
                        } else {
                            Some(
                                ((i * 7 + c * 3) % 11) as f64
                                    + (i % 2) as f64 * (c == 2) as u8 as f64 * 20.0,
                            )
                        }
                    })
                    .collect()
            })
            .collect();
        FeatureMatrix::new(
            names,
            rows,
            (0..24).map(|i| (i % 2) as u8).collect(),
            vec![40.0; 24],
            (0..24).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    fn quick(model: ModelKind, imputation: Option<Imputation>, reps: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(model, imputation, reps, 3);
        c.params = Some(match model {
            ModelKind::Boosted => ModelParams::Boosted(BoostParams {
                n_trees: 10,
                ..Default::default()
            }),
            ModelKind::Forest => ModelParams::Forest(crate::learn::forest::ForestParams {
                n_trees: 11,
                ..Default::default()
            }),
        });
        c
    }

    #[test]
    fn one_rep_one_record() {
        let out = run_experiment(&matrix(false), &quick(ModelKind::Boosted, None, 1)).unwrap();
        assert_eq!(out.evaluation.fits.len(), 1);
        assert_eq!(out.sis.fits, 1);
    }

    #[test]
    fn boosting_skips_imputation_by_default() {
        let out = run_experiment(&matrix(true), &quick(ModelKind::Boosted, None, 2)).unwrap();
        assert_eq!(out.imputation, Imputation::None);
        assert_eq!(out.imputed_cells, 0);
    }

    #[test]
    fn forest_requires_imputation_choice() {
        for imp in [None, Some(Imputation::None)] {
            let err = run_experiment(&matrix(true), &quick(ModelKind::Forest, imp, 2)).unwrap_err();
            assert!(matches!(err, Error::Config(_)));
        }
        let out = run_experiment(
            &matrix(true),
            &quick(ModelKind::Forest, Some(Imputation::Knn), 2),
        )
        .unwrap();
        assert_eq!(out.imputed_cells, 6);
    }

    #[test]
    fn mismatched_params_rejected() {
        let mut c = quick(ModelKind::Forest, Some(Imputation::Zero), 1);
        c.params = Some(ModelParams::Boosted(BoostParams::default()));
        assert!(c.validate().is_err());
        assert!(quick(ModelKind::Boosted, None, 0).validate().is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick(ModelKind::Forest, Some(Imputation::Zero), 3);
        let a = write_experiment(
            &run_experiment(&matrix(true), &cfg).unwrap(),
            &dir.path().join("a"),
        )
        .unwrap();
        let b = write_experiment(
            &run_experiment(&matrix(true), &cfg).unwrap(),
            &dir.path().join("b"),
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}
