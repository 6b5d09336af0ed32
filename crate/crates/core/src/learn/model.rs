//! Trained ensembles, their JSON export and the model-kind dispatch.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::boost::{sigmoid, train_boosted, BoostParams};
use super::dataset::FeatureMatrix;
use super::forest::{train_forest, ForestParams};
use super::tree::TreeNode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Boosted,
    Forest,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boosted" | "xgboost" => Ok(ModelKind::Boosted),
            "forest" | "rf" => Ok(ModelKind::Forest),
            other => Err(Error::Config(format!(
                "unknown model kind '{other}' (boosted|forest)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Boosted => "boosted",
            ModelKind::Forest => "forest",
        })
    }
}

/// Hyperparameters of either model kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Boosted(BoostParams),
    Forest(ForestParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Boosted(_) => ModelKind::Boosted,
            ModelParams::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Boosted => ModelParams::Boosted(BoostParams::default()),
            ModelKind::Forest => ModelParams::Forest(ForestParams::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Boosted(p) => p.validate(),
            ModelParams::Forest(p) => p.validate(),
        }
    }
}

/// Trains the model described by `params`; `seed` drives the forest's
/// bootstrap and feature sampling and is ignored by boosting.
pub fn train(train: &FeatureMatrix, params: &ModelParams, seed: u64) -> Result<TreeEnsemble> {
    match params {
        ModelParams::Boosted(p) => train_boosted(train, p),
        ModelParams::Forest(p) => train_forest(train, p, seed),
    }
}

/// Boosted margin is `base_score + learning_rate · Σ leaf`; the forest
/// leaf holds the class-1 fraction of its node and trees vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub importance: Vec<f64>,
}

impl TreeEnsemble {
    /// Raw boosted score before the logistic link.
    pub fn margin(&self, row: &[Option<f64>]) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Number of trees voting for class 1.
    pub fn votes(&self, row: &[Option<f64>]) -> usize {
        self.trees.iter().filter(|t| t.predict(row) > 0.5).count()
    }

    /// Probability of class 1: logistic margin for boosting, vote share for
    /// the forest.
    pub fn predict_proba(&self, row: &[Option<f64>]) -> f64 {
        match self.kind {
            ModelKind::Boosted => sigmoid(self.margin(row)),
            ModelKind::Forest => self.votes(row) as f64 / self.trees.len().max(1) as f64,
        }
    }

    /// Predicted class; forest ties go to class 0.
    pub fn predict(&self, row: &[Option<f64>]) -> u8 {
        match self.kind {
            ModelKind::Boosted => (self.margin(row) > 0.0) as u8,
            ModelKind::Forest => (2 * self.votes(row) > self.trees.len()) as u8,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.importance.len() != model.feature_names.len() {
            return Err(Error::InvalidInput(
                "importance length differs from feature count".into(),
            ));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forest_of(leaves: &[f64]) -> TreeEnsemble {
        TreeEnsemble {
            kind: ModelKind::Forest,
            feature_names: vec!["a".into()],
            trees: leaves.iter().map(|&v| TreeNode::leaf(v)).collect(),
            learning_rate: 1.0,
            base_score: 0.0,
            importance: vec![0.0],
        }
    }

    #[test]
    fn majority_vote() {
        assert_eq!(forest_of(&[1.0, 1.0, 0.0]).predict(&[None]), 1);
        assert_eq!(forest_of(&[0.0, 1.0, 0.0]).predict(&[None]), 0);
        assert_eq!(forest_of(&[0.0, 1.0]).predict(&[None]), 0);
    }

    #[test]
    fn vote_is_permutation_invariant() {
        let leaves = [1.0, 0.0, 0.8, 0.2, 1.0];
        let mut rev = leaves;
        rev.reverse();
        assert_eq!(
            forest_of(&leaves).predict_proba(&[None]),
            forest_of(&rev).predict_proba(&[None])
        );
    }

    #[test]
    fn boosted_margin_scales_leaves() {
        let m = TreeEnsemble {
            kind: ModelKind::Boosted,
            feature_names: vec!["a".into()],
            trees: vec![TreeNode::leaf(-0.1224), TreeNode::leaf(0.0)],
            learning_rate: 0.2,
            base_score: 0.0,
            importance: vec![0.0],
        };
        assert!((m.margin(&[None]) + 0.02448).abs() < 1e-15);
        assert_eq!((m.predict_proba(&[None]) * 1000.0).round(), 494.0);
        assert_eq!(m.predict(&[None]), 0);
        let back = TreeEnsemble::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("boosted".parse::<ModelKind>().unwrap(), ModelKind::Boosted);
        assert_eq!("Forest".parse::<ModelKind>().unwrap(), ModelKind::Forest);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
