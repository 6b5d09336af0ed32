//! Gradient-boosted trees on the logistic loss with second-order split
//! gain, L2-penalised leaves and learned default directions for missing
//! values.

use serde::{Deserialize, Serialize};

use super::dataset::FeatureMatrix;
use super::model::{ModelKind, TreeEnsemble};
use super::tree::{midpoint, TreeNode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.3,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(Error::Config(
                "boosting needs at least one tree of depth >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::Config(
                "learning rate must be positive; lambda and min child weight non-negative".into(),
            ));
        }
        Ok(())
    }
}

pub fn sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin).exp())
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    default_left: bool,
    gain: f64,
}

struct Builder<'a> {
    rows: &'a [Vec<Option<f64>>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a BoostParams,
    importance: &'a mut [f64],
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn leaf_weight(&self, idx: &[usize]) -> f64 {
        let g: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        -g / (h + self.params.lambda)
    }

    fn best_split(&self, idx: &[usize]) -> Option<Split> {
        let g_total: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h_total: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        let parent = self.score(g_total, h_total);
        let mcw = self.params.min_child_weight;
        let n_features = self.rows.first().map_or(0, Vec::len);

        let mut best: Option<Split> = None;
        let mut present: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
        for feature in 0..n_features {
            present.clear();
            let (mut g_miss, mut h_miss) = (0.0, 0.0);
            for &i in idx {
                match self.rows[i][feature] {
                    Some(v) => present.push((v, i)),
                    None => {
                        g_miss += self.grad[i];
                        h_miss += self.hess[i];
                    }
                }
            }
            if present.len() < 2 {
                continue;
            }
            present.sort_by(|a, b| a.0.total_cmp(&b.0));
            let has_missing = present.len() < idx.len();

            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..present.len() - 1 {
                let (v, i) = present[k];
                gl += self.grad[i];
                hl += self.hess[i];
                let next = present[k + 1].0;
                if next <= v {
                    continue;
                }
                let gr = g_total - g_miss - gl;
                let hr = h_total - h_miss - hl;
                // missing right first, then missing left
                let directions: &[bool] = if has_missing {
                    &[false, true]
                } else {
                    &[false]
                };
                for &default_left in directions {
                    let (gl2, hl2, gr2, hr2) = if default_left {
                        (gl + g_miss, hl + h_miss, gr, hr)
                    } else {
                        (gl, hl, gr + g_miss, hr + h_miss)
                    };
                    if hl2 < mcw || hr2 < mcw {
                        continue;
                    }
                    let gain = 0.5 * (self.score(gl2, hl2) + self.score(gr2, hr2) - parent);
                    if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                        best = Some(Split {
                            feature,
                            threshold: midpoint(v, next),
                            default_left,
                            gain,
                        });
                    }
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> TreeNode {
        if depth >= self.params.max_depth {
            return TreeNode::leaf(self.leaf_weight(idx));
        }
        let Some(split) = self.best_split(idx) else {
            return TreeNode::leaf(self.leaf_weight(idx));
        };
        self.importance[split.feature] += split.gain;
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter()
                .partition(|&&i| match self.rows[i][split.feature] {
                    Some(v) => v < split.threshold,
                    None => split.default_left,
                });
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            default_left: split.default_left,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

/// Stagewise fit from a zero margin. Importance is the total split gain per
/// feature.
pub fn train_boosted(train: &FeatureMatrix, params: &BoostParams) -> Result<TreeEnsemble> {
    params.validate()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::InvalidInput(
            "cannot train on an empty matrix".into(),
        ));
    }
    if train.labels.iter().all(|&l| l == train.labels[0]) {
        log::warn!("training data holds a single class; trees reduce to constant leaves");
    }

    let base_score = 0.0;
    let mut margin = vec![base_score; n];
    let mut importance = vec![0.0; train.n_cols()];
    let mut trees = Vec::with_capacity(params.n_trees);
    let all: Vec<usize> = (0..n).collect();
    let y: Vec<f64> = train.labels.iter().map(|&l| l as f64).collect();

    for _ in 0..params.n_trees {
        let p: Vec<f64> = margin.iter().map(|&m| sigmoid(m)).collect();
        let grad: Vec<f64> = p.iter().zip(&y).map(|(p, y)| p - y).collect();
        let hess: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let tree = Builder {
            rows: &train.rows,
            grad: &grad,
            hess: &hess,
            params,
            importance: &mut importance,
        }
        .grow(&all, 0);
        for (m, row) in margin.iter_mut().zip(&train.rows) {
            *m += params.learning_rate * tree.predict(row);
        }
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        kind: ModelKind::Boosted,
        feature_names: train.names.clone(),
        trees,
        learning_rate: params.learning_rate,
        base_score,
        importance,
    })
}
