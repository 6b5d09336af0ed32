use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spatter::learn::boost::{sigmoid, train_boosted, BoostParams};
use spatter::learn::forest::{train_forest, ForestParams};
use spatter::learn::impute::{knn_impute, zero_impute};
use spatter::learn::model::{ModelParams, TreeEnsemble};
use spatter::learn::tree::TreeNode;
use spatter::learn::{run_fits, sis, FeatureMatrix};

fn matrix(rows: Vec<Vec<Option<f64>>>, labels: Vec<u8>) -> FeatureMatrix {
    let n = rows.len();
    let cols = rows[0].len();
    FeatureMatrix::new(
        (0..cols).map(|c| format!("f{c}")).collect(),
        rows,
        labels,
        vec![30.0; n],
        (0..n).map(|i| format!("r{i}")).collect(),
    )
    .unwrap()
}

/// Rows of `cols` cells in [0, 10); a cell is missing when its draw lands
/// above `1 - missing`.
fn cells(rows: usize, cols: usize, missing: f64) -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
    proptest::collection::vec(
        proptest::collection::vec((0.0f64..10.0, 0.0f64..1.0), cols),
        rows,
    )
    .prop_map(move |rows| {
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|(v, u)| (u >= missing).then_some(v))
                    .collect()
            })
            .collect()
    })
}

/// Walks a tree the slow way: observed values compare against the
/// threshold, missing ones take the stored default side.
fn replay(node: &TreeNode, row: &[Option<f64>]) -> f64 {
    match node {
        TreeNode::Leaf { leaf } => *leaf,
        TreeNode::Split {
            feature,
            threshold,
            default_left,
            left,
            right,
        } => {
            let go_left = match row[*feature] {
                Some(v) => v < *threshold,
                None => *default_left,
            };
            replay(if go_left { left } else { right }, row)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn missing_values_follow_default_direction(rows in cells(30, 3, 0.3), probe in cells(5, 3, 0.5)) {
        let labels: Vec<u8> = rows.iter().map(|r| (r[0].unwrap_or(5.0) + r[1].unwrap_or(0.0) > 7.0) as u8).collect();
        let model = train_boosted(&matrix(rows, labels), &BoostParams { n_trees: 8, ..Default::default() }).unwrap();
        for row in &probe {
            let raw: f64 = model.trees.iter().map(|t| replay(t, row)).sum();
            let expected = model.base_score + model.learning_rate * raw;
            prop_assert_eq!(model.margin(row).to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn forest_vote_ignores_tree_order(rows in cells(30, 3, 0.0), seed in any::<u64>()) {
        let labels: Vec<u8> = rows.iter().map(|r| (r[2].unwrap() > 5.0) as u8).collect();
        let m = matrix(rows, labels);
        let forest = train_forest(&m, &ForestParams { n_trees: 15, max_depth: 3, max_features: 2, min_leaf_size: 1 }, seed).unwrap();
        let mut shuffled = forest.clone();
        shuffled.trees.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for row in &m.rows {
            prop_assert_eq!(forest.predict(row), shuffled.predict(row));
            prop_assert_eq!(forest.votes(row), shuffled.votes(row));
        }
    }

    #[test]
    fn imputation_keeps_observed_cells(rows in cells(25, 4, 0.2)) {
        prop_assume!((0..4).all(|c| rows.iter().filter(|r| r[c].is_some()).count() >= 3));
        let m = matrix(rows, vec![0; 25]);
        for out in [zero_impute(&m), knn_impute(&m, 3).unwrap()] {
            prop_assert_eq!(out.missing_count(), 0);
            for (a, b) in m.rows.iter().flatten().zip(out.rows.iter().flatten()) {
                if let Some(v) = a {
                    prop_assert_eq!(v.to_bits(), b.unwrap().to_bits());
                }
            }
        }
    }

    #[test]
    fn single_separating_feature_fits_training_data(
        rows in cells(24, 3, 0.0),
        cut in 2.0f64..8.0,
        col in 0usize..3,
    ) {
        let labels: Vec<u8> = rows.iter().map(|r| (r[col].unwrap() > cut) as u8).collect();
        prop_assume!(labels.contains(&1) && labels.contains(&0));
        let m = matrix(rows, labels);
        let boosted = train_boosted(&m, &BoostParams { n_trees: 20, max_depth: 1, min_child_weight: 0.0, ..Default::default() }).unwrap();
        let forest = train_forest(&m, &ForestParams { n_trees: 25, max_depth: 1, max_features: 3, min_leaf_size: 1 }, 1).unwrap();
        for model in [&boosted, &forest] {
            let correct = m.rows.iter().zip(&m.labels).filter(|(r, &l)| model.predict(r) == l).count();
            prop_assert_eq!(correct, m.n_rows());
        }
    }

    #[test]
    fn probability_strictly_increases_with_margin(a in -30.0f64..30.0, step in 1e-6f64..10.0) {
        prop_assert!(sigmoid(a + step) > sigmoid(a));
    }
}

fn dominant_fixture() -> FeatureMatrix {
    // column 2 decides the class; column 11 is constant and can never split
    let rows: Vec<Vec<Option<f64>>> = (0..40)
        .map(|i| {
            (0..12)
                .map(|c| {
                    Some(match c {
                        2 => (i % 2) as f64 * 10.0 + (i % 5) as f64,
                        11 => 3.0,
                        _ => ((i * (c + 3) * 7) % 13) as f64,
                    })
                })
                .collect()
        })
        .collect();
    matrix(rows, (0..40).map(|i| (i % 2) as u8).collect())
}

#[test]
fn dominant_and_unused_features() {
    let m = dominant_fixture();
    for params in [
        ModelParams::Boosted(BoostParams {
            n_trees: 10,
            ..Default::default()
        }),
        ModelParams::Forest(ForestParams {
            n_trees: 15,
            ..Default::default()
        }),
    ] {
        let report = sis(&m, &params, 9, 4).unwrap();
        assert_eq!(report.scores[2], 1.0, "{:?}", params.kind());
        assert_eq!(report.scores[11], 0.0);
    }
}

#[test]
fn fits_are_reproducible_and_ordered() {
    let m = dominant_fixture();
    let params = ModelParams::Forest(ForestParams {
        n_trees: 9,
        ..Default::default()
    });
    let (e1, s1) = run_fits(&m, &params, 6, 21, &[30.0]).unwrap();
    let (e2, s2) = run_fits(&m, &params, 6, 21, &[30.0]).unwrap();
    assert_eq!(e1, e2);
    assert_eq!(s1, s2);
    assert_eq!(
        e1.fits.iter().map(|f| f.fit).collect::<Vec<_>>(),
        (0..6).collect::<Vec<_>>()
    );
    assert!(sis(&m, &params, 1, 0).is_ok());
    assert!(run_fits(&m, &params, 0, 0, &[]).is_err());
}

#[test]
fn model_json_round_trip() {
    let m = dominant_fixture();
    let model = train_boosted(
        &m,
        &BoostParams {
            n_trees: 12,
            ..Default::default()
        },
    )
    .unwrap();
    let back = TreeEnsemble::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
    for row in &m.rows {
        assert_eq!(
            back.predict_proba(row).to_bits(),
            model.predict_proba(row).to_bits()
        );
    }
}
