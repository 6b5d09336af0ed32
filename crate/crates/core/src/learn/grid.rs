//! Exhaustive hyperparameter search by k-fold cross-validated accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boost::BoostParams;
use super::dataset::FeatureMatrix;
use super::forest::ForestParams;
use super::model::{train, ModelKind, ModelParams};
use super::split::{derive_seed, kfold};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ModelParams,
    pub best_index: usize,
    /// Mean cross-validated accuracy per grid point.
    pub scores: Vec<f64>,
}

/// Default search space per model kind.
pub fn default_grid(kind: ModelKind) -> Vec<ModelParams> {
    let mut grid = Vec::new();
    match kind {
        ModelKind::Boosted => {
            for n_trees in [50, 100, 200] {
                for max_depth in [2, 3, 4] {
                    for learning_rate in [0.1, 0.3] {
                        grid.push(ModelParams::Boosted(BoostParams {
                            n_trees,
                            max_depth,
                            learning_rate,
                            lambda: 1.0,
                            min_child_weight: 1.0,
                        }));
                    }
                }
            }
        }
        ModelKind::Forest => {
            for n_trees in [101, 201] {
                for max_depth in [4, 8] {
                    for max_features in [7, 16] {
                        grid.push(ModelParams::Forest(ForestParams {
                            n_trees,
                            max_depth,
                            max_features,
                            min_leaf_size: 1,
                        }));
                    }
                }
            }
        }
    }
    grid
}

fn cv_accuracy(
    m: &FeatureMatrix,
    params: &ModelParams,
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for (f, held_out) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..m.n_rows()).filter(|i| !held_out.contains(i)).collect();
        let model = train(&m.subset(&train_idx), params, derive_seed(seed, f as u64))?;
        let hits = held_out
            .iter()
            .filter(|&&i| model.predict(&m.rows[i]) == m.labels[i])
            .count();
        total += hits as f64 / held_out.len() as f64;
    }
    Ok(total / folds.len() as f64)
}

/// Scores every grid point on the same folds and keeps the first best.
pub fn grid_search(
    m: &FeatureMatrix,
    grid: &[ModelParams],
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    for p in grid {
        p.validate()?;
    }
    let partition = kfold(m.n_rows(), folds, seed)?;
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|p| cv_accuracy(m, p, &partition, derive_seed(seed, 1)))
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridResult {
        best: grid[best_index],
        best_index,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Class is x XOR y on a jittered 2×2 layout: one split cannot separate
    /// it, two levels can.
    fn xor_matrix() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..48 {
            let (a, b) = (i % 2, (i / 2) % 2);
            let jitter = (i as f64 * 0.37).sin() * 0.2;
            rows.push(vec![Some(a as f64 + jitter), Some(b as f64 - jitter)]);
            labels.push((a ^ b) as u8);
        }
        FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            rows,
            labels,
            vec![10.0; 48],
            (0..48).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    fn boosted(depth: usize) -> ModelParams {
        ModelParams::Boosted(BoostParams {
            n_trees: 20,
            max_depth: depth,
            learning_rate: 0.3,
            lambda: 1.0,
            min_child_weight: 0.0,
        })
    }

    #[test]
    fn single_point_grid() {
        let r = grid_search(&xor_matrix(), &[boosted(1)], 4, 0).unwrap();
        assert_eq!(r.best, boosted(1));
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn duplicates_keep_first() {
        let r = grid_search(&xor_matrix(), &[boosted(2), boosted(2)], 4, 0).unwrap();
        assert_eq!(r.scores[0], r.scores[1]);
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn depth_two_wins_on_xor() {
        let r = grid_search(&xor_matrix(), &[boosted(1), boosted(2)], 4, 0).unwrap();
        assert_eq!(r.best_index, 1);
        assert!(r.scores[1] > r.scores[0] + 0.3, "{:?}", r.scores);
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(grid_search(&xor_matrix(), &[], 4, 0).is_err());
    }

    #[test]
    fn default_grids_are_valid() {
        assert_eq!(default_grid(ModelKind::Boosted).len(), 18);
        for kind in [ModelKind::Boosted, ModelKind::Forest] {
            assert!(default_grid(kind)
                .iter()
                .all(|p| p.validate().is_ok() && p.kind() == kind));
        }
    }
}
