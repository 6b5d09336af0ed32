//! Random forest of Gini CART trees on bootstrap samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::FeatureMatrix;
use super::model::{ModelKind, TreeEnsemble};
use super::split::derive_seed;
use super::tree::{midpoint, TreeNode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features examined per split.
    pub max_features: usize,
    pub min_leaf_size: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        // 7 ≈ √48
        Self {
            n_trees: 101,
            max_depth: 8,
            max_features: 7,
            min_leaf_size: 1,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0
            || self.max_depth == 0
            || self.max_features == 0
            || self.min_leaf_size == 0
        {
            return Err(Error::Config(
                "forest parameters must all be positive".into(),
            ));
        }
        Ok(())
    }
}

fn gini(ones: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = ones as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: &'a ForestParams,
    n_features: usize,
    sample_size: f64,
    importance: Vec<f64>,
    rng: ChaCha8Rng,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Grower<'_> {
    fn ones(&self, idx: &[usize]) -> usize {
        idx.iter().filter(|&&i| self.y[i] == 1).count()
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let n = idx.len();
        let total_ones = self.ones(idx);
        let parent = gini(total_ones, n);
        let min_leaf = self.params.min_leaf_size;

        let mut order: Vec<usize> = (0..self.n_features).collect();
        order.shuffle(&mut self.rng);

        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        let mut values: Vec<(f64, u8)> = Vec::with_capacity(n);
        for &feature in &order {
            if visited >= self.params.max_features {
                break;
            }
            values.clear();
            values.extend(idx.iter().map(|&i| (self.x[i][feature], self.y[i])));
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values[0].0 == values[n - 1].0 {
                // constant features do not use up the per-split budget
                continue;
            }
            visited += 1;

            let mut left_ones = 0;
            for k in 0..n - 1 {
                left_ones += values[k].1 as usize;
                let (v, next) = (values[k].0, values[k + 1].0);
                let n_left = k + 1;
                let n_right = n - n_left;
                if next <= v || n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let child = (n_left as f64 * gini(left_ones, n_left)
                    + n_right as f64 * gini(total_ones - left_ones, n_right))
                    / n as f64;
                let decrease = parent - child;
                if decrease > 0.0 && best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(v, next),
                        decrease,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> TreeNode {
        let n = idx.len();
        let ones = self.ones(idx);
        let leaf = TreeNode::leaf(ones as f64 / n as f64);
        if depth >= self.params.max_depth
            || ones == 0
            || ones == n
            || n < 2 * self.params.min_leaf_size
        {
            return leaf;
        }
        let Some(split) = self.best_split(idx) else {
            return leaf;
        };
        self.importance[split.feature] += n as f64 / self.sample_size * split.decrease;
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] < split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            default_left: false,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

/// Trains a forest; every cell must be observed. Importance is the mean
/// over trees of each tree's normalised weighted Gini decrease.
pub fn train_forest(
    train: &FeatureMatrix,
    params: &ForestParams,
    seed: u64,
) -> Result<TreeEnsemble> {
    params.validate()?;
    if let Some(c) = train.first_missing_column() {
        return Err(Error::MissingValues {
            column: train.names[c].clone(),
        });
    }
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::InvalidInput(
            "cannot train on an empty matrix".into(),
        ));
    }
    let x: Vec<Vec<f64>> = train
        .rows
        .iter()
        .map(|r| r.iter().map(|c| c.expect("checked above")).collect())
        .collect();
    let n_features = train.n_cols();

    let grown: Vec<(TreeNode, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut grower = Grower {
                x: &x,
                y: &train.labels,
                params,
                n_features,
                sample_size: n as f64,
                importance: vec![0.0; n_features],
                rng,
            };
            let tree = grower.grow(&sample, 0);
            let mut imp = grower.importance;
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                imp.iter_mut().for_each(|v| *v /= total);
            }
            (tree, imp)
        })
        .collect();

    let mut importance = vec![0.0; n_features];
    for (_, imp) in &grown {
        for (acc, v) in importance.iter_mut().zip(imp) {
            *acc += v;
        }
    }
    importance
        .iter_mut()
        .for_each(|v| *v /= params.n_trees as f64);

    Ok(TreeEnsemble {
        kind: ModelKind::Forest,
        feature_names: train.names.clone(),
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        learning_rate: 1.0,
        base_score: 0.0,
        importance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<Option<f64>>>, labels: Vec<u8>) -> FeatureMatrix {
        let n = rows.len();
        let cols = rows[0].len();
        FeatureMatrix::new(
            (0..cols).map(|c| format!("f{c}")).collect(),
            rows,
            labels,
            vec![10.0; n],
            (0..n).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    fn separable(n: usize) -> FeatureMatrix {
        // feature 1 separates; features 0 and 2 are noise
        let rows = (0..n)
            .map(|i| {
                vec![
                    Some(((i * 37) % 11) as f64),
                    Some(i as f64),
                    Some(((i * 13) % 7) as f64),
                ]
            })
            .collect();
        matrix(rows, (0..n).map(|i| (i >= n / 2) as u8).collect())
    }

    #[test]
    fn single_stump_puts_all_importance_on_separator() {
        let m = separable(40);
        let params = ForestParams {
            n_trees: 1,
            max_depth: 1,
            max_features: 3,
            min_leaf_size: 1,
        };
        let f = train_forest(&m, &params, 3).unwrap();
        assert_eq!(f.importance, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn separable_feature_fits_training_set() {
        let m = separable(40);
        let params = ForestParams {
            n_trees: 25,
            max_depth: 4,
            max_features: 3,
            min_leaf_size: 1,
        };
        let f = train_forest(&m, &params, 11).unwrap();
        let correct = m
            .rows
            .iter()
            .zip(&m.labels)
            .filter(|(r, &l)| f.predict(r) == l)
            .count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn same_seed_same_forest() {
        let m = separable(30);
        let p = ForestParams {
            n_trees: 15,
            max_depth: 3,
            max_features: 1,
            min_leaf_size: 2,
        };
        assert_eq!(
            train_forest(&m, &p, 5).unwrap(),
            train_forest(&m, &p, 5).unwrap()
        );
        assert_ne!(
            train_forest(&m, &p, 5).unwrap(),
            train_forest(&m, &p, 6).unwrap()
        );
    }

    #[test]
    fn missing_values_rejected() {
        let m = matrix(
            vec![vec![Some(1.0), None], vec![Some(2.0), Some(1.0)]],
            vec![0, 1],
        );
        match train_forest(&m, &ForestParams::default(), 0) {
            Err(Error::MissingValues { column }) => assert_eq!(column, "f1"),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn importance_sums_to_one_when_split() {
        let m = separable(50);
        let f = train_forest(&m, &ForestParams::default(), 9).unwrap();
        assert!((f.importance.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
