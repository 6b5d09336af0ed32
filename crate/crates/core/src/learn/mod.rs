//! Classifiers, imputation and repeated-split experiments over pattern
//! feature matrices.

pub mod boost;
pub mod dataset;
pub mod evaluate;
pub mod forest;
pub mod grid;
pub mod impute;
pub mod model;
pub mod sis;
pub mod split;
pub mod tree;

pub use boost::{sigmoid, train_boosted, BoostParams};
pub use dataset::FeatureMatrix;
pub use evaluate::{
    evaluate, EvaluationReport, FitEvaluation, SubsetAccuracy, DEFAULT_BT_THRESHOLDS,
};
pub use forest::{train_forest, ForestParams};
pub use grid::{default_grid, grid_search, GridResult};
pub use impute::{knn_impute, zero_impute, Imputation};
pub use model::{train, ModelKind, ModelParams, TreeEnsemble};
pub use sis::{run_fits, sis, top_k, SisReport, TOP_K};
pub use split::{derive_seed, kfold, split_train_test};
pub use tree::TreeNode;
