//! Random-forest classifier deciding whether a video fits its target skill.
//!
//! Trees are CART trees grown with Gini impurity on bootstrap samples, each
//! split considering a random subset of the six features. Every tree gets its
//! own ChaCha stream derived from the master seed, so a forest is a pure
//! function of `(data, config)`.

mod tree;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Level;
use crate::metrics::{train_test_split, Confusion, F1Score};

pub use tree::{DecisionTree, Node};

pub const NUM_FEATURES: usize = 6;
pub const FEATURE_NAMES: [&str; NUM_FEATURES] =
    ["length", "rating", "view_count", "relevancy_score", "level", "text_similarity"];
pub const FIT_MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FitModelError {
    #[error("training data contains only one label")]
    SingleClassCorpus,
    #[error("unsupported model format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The six fit-model inputs in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitFeatures {
    pub length_s: f64,
    pub rating: f64,
    pub view_count: f64,
    pub relevancy_score: f64,
    pub level: Level,
    pub text_similarity: f64,
}

impl FitFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.length_s,
            self.rating,
            self.view_count,
            self.relevancy_score,
            f64::from(self.level.ordinal()),
            self.text_similarity,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: Some(12),
            min_samples_leaf: 2,
            features_per_split: 3,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPrediction {
    pub probability: f64,
    pub label: bool,
}

/// Mean decrease in impurity per feature, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportances(pub [f64; NUM_FEATURES]);

impl FeatureImportances {
    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.0.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub version: u32,
    pub config: ForestConfig,
    pub trees: Vec<DecisionTree>,
    pub importances: FeatureImportances,
}

pub fn train_fit_model(data: &[(FitFeatures, bool)], config: &ForestConfig) -> Result<RandomForestModel, FitModelError> {
    let rows: Vec<[f64; NUM_FEATURES]> = data.iter().map(|(f, _)| f.to_array()).collect();
    let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
    if !(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l)) {
        return Err(FitModelError::SingleClassCorpus);
    }

    let params = tree::TreeParams {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf.max(1),
        features_per_split: config.features_per_split,
    };
    let n = rows.len();
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut importance_sum = [0.0; NUM_FEATURES];
    for t in 0..config.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(t as u64);
        let sample: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut imp = [0.0; NUM_FEATURES];
        trees.push(DecisionTree::grow(&rows, &labels, sample, &params, &mut rng, &mut imp));
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            importance_sum.iter_mut().zip(imp).for_each(|(s, v)| *s += v / total);
        }
    }

    Ok(RandomForestModel {
        version: FIT_MODEL_FORMAT_VERSION,
        config: config.clone(),
        trees,
        importances: normalize_importances(importance_sum),
    })
}

fn normalize_importances(raw: [f64; NUM_FEATURES]) -> FeatureImportances {
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return FeatureImportances([1.0 / NUM_FEATURES as f64; NUM_FEATURES]);
    }
    FeatureImportances(raw.map(|v| v / total))
}

impl RandomForestModel {
    pub fn predict(&self, features: &FitFeatures) -> FitPrediction {
        let x = features.to_array();
        let votes = self.trees.iter().filter(|t| t.vote(&x)).count();
        let probability = if self.trees.is_empty() { 0.0 } else { votes as f64 / self.trees.len() as f64 };
        FitPrediction { probability, label: probability >= 0.5 }
    }

    pub fn to_json(&self) -> Result<String, FitModelError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, FitModelError> {
        let model: Self = serde_json::from_str(text)?;
        if model.version != FIT_MODEL_FORMAT_VERSION {
            return Err(FitModelError::UnsupportedVersion { found: model.version, expected: FIT_MODEL_FORMAT_VERSION });
        }
        for tree in &model.trees {
            let ok = !tree.nodes.is_empty()
                && tree.nodes.iter().all(|node| match node {
                    Node::Split { feature, left, right, .. } => {
                        *feature < NUM_FEATURES && *left < tree.nodes.len() && *right < tree.nodes.len()
                    }
                    Node::Leaf { counts } => counts[0] + counts[1] > 0,
                });
            if !ok {
                return Err(FitModelError::Malformed("tree references an invalid node or feature".into()));
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FitModelError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FitModelError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn predict_fit(model: &RandomForestModel, features: &FitFeatures) -> FitPrediction {
    model.predict(features)
}

pub fn feature_importances(model: &RandomForestModel) -> FeatureImportances {
    model.importances
}

/// Result of training on a seeded split and scoring the held-out part.
#[derive(Debug, Clone)]
pub struct FitEvaluation {
    pub model: RandomForestModel,
    pub train_size: usize,
    pub test_size: usize,
    pub scores: F1Score,
}

/// Shuffles with `config.seed`, trains on `train_fraction` of the rows and
/// reports F1 on the rest.
pub fn train_and_evaluate(
    data: &[(FitFeatures, bool)],
    train_fraction: f64,
    config: &ForestConfig,
) -> Result<FitEvaluation, FitModelError> {
    let (train_idx, test_idx) = train_test_split(data.len(), train_fraction, config.seed);
    let train: Vec<_> = train_idx.iter().map(|&i| data[i]).collect();
    let model = train_fit_model(&train, config)?;
    let confusion = Confusion::from_pairs(test_idx.iter().map(|&i| (model.predict(&data[i].0).label, data[i].1)));
    Ok(FitEvaluation {
        model,
        train_size: train_idx.len(),
        test_size: test_idx.len(),
        scores: confusion.scores(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_rows(n: usize, seed: u64) -> Vec<FitFeatures> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| FitFeatures {
                length_s: rng.random_range(30.0..3600.0),
                rating: rng.random_range(1.0..5.0),
                view_count: rng.random_range(0.0..1e6),
                relevancy_score: 1.0 / rng.random_range(1..50) as f64,
                level: Level::ALL[rng.random_range(0..3)],
                text_similarity: rng.random_range(-1.0..1.0),
            })
            .collect()
    }

    fn by_length(rows: Vec<FitFeatures>) -> Vec<(FitFeatures, bool)> {
        rows.into_iter().map(|f| (f, f.length_s > 900.0)).collect()
    }

    #[test]
    fn single_class_rejected() {
        let data: Vec<_> = random_rows(10, 1).into_iter().map(|f| (f, true)).collect();
        assert!(matches!(train_fit_model(&data, &ForestConfig::default()), Err(FitModelError::SingleClassCorpus)));
    }

    #[test]
    fn single_feature_signal_dominates_importance() {
        let data = by_length(random_rows(300, 2));
        let model = train_fit_model(&data, &ForestConfig { seed: 5, ..Default::default() }).unwrap();
        let imp = feature_importances(&model);
        assert!(imp.0[0] > 0.9, "{imp:?}");
        assert!((imp.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noise_labels_spread_importance() {
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let data: Vec<_> = random_rows(300, seed).into_iter().map(|f| (f, rng.random_bool(0.5))).collect();
            let model = train_fit_model(&data, &ForestConfig { seed, ..Default::default() }).unwrap();
            let imp = feature_importances(&model);
            assert!(imp.0.iter().all(|&v| v <= 0.6), "{imp:?}");
        }
    }

    #[test]
    fn unanimous_and_single_tree_votes() {
        let data = by_length(random_rows(100, 3));
        let model = train_fit_model(&data, &ForestConfig { n_trees: 1, seed: 1, ..Default::default() }).unwrap();
        for (f, _) in &data {
            let p = model.predict(f).probability;
            assert!(p == 0.0 || p == 1.0);
        }
        let forest = train_fit_model(&data, &ForestConfig { n_trees: 15, seed: 1, ..Default::default() }).unwrap();
        let long = FitFeatures { length_s: 3000.0, ..data[0].0 };
        assert_eq!(forest.predict(&long).probability, 1.0);
        assert!(forest.predict(&long).label);
    }

    #[test]
    fn memorizes_training_set_without_bootstrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<_> = random_rows(120, 4).into_iter().map(|f| (f, rng.random_bool(0.4))).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: false,
            seed: 2,
            ..Default::default()
        };
        let model = train_fit_model(&data, &cfg).unwrap();
        for (f, label) in &data {
            assert_eq!(model.predict(f).label, *label);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let data = by_length(random_rows(150, 6));
        let cfg = ForestConfig { n_trees: 20, seed: 77, ..Default::default() };
        let a = train_fit_model(&data, &cfg).unwrap();
        let b = train_fit_model(&data, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let reloaded = RandomForestModel::from_json(&a.to_json().unwrap()).unwrap();
        for f in random_rows(50, 9) {
            assert_eq!(a.predict(&f), reloaded.predict(&f));
        }
    }

    #[test]
    fn malformed_models_rejected() {
        let data = by_length(random_rows(40, 6));
        let mut model = train_fit_model(&data, &ForestConfig { n_trees: 2, ..Default::default() }).unwrap();
        model.trees[0].nodes.push(Node::Split { feature: 9, threshold: 0.0, left: 0, right: 0 });
        assert!(matches!(RandomForestModel::from_json(&model.to_json().unwrap()), Err(FitModelError::Malformed(_))));
        model.version = 7;
        assert!(matches!(
            RandomForestModel::from_json(&model.to_json().unwrap()),
            Err(FitModelError::UnsupportedVersion { found: 7, .. })
        ));
    }

    #[test]
    fn held_out_evaluation() {
        let data: Vec<_> = random_rows(300, 8).into_iter().map(|f| (f, f.text_similarity > 0.5)).collect();
        let eval = train_and_evaluate(&data, 0.7, &ForestConfig { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(eval.train_size, 210);
        assert_eq!(eval.test_size, 90);
        assert!(eval.scores.f1 >= 0.95, "{:?}", eval.scores);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn probability_is_fraction_of_tree_votes(seed in 0u64..1000) {
            let data = by_length(random_rows(60, seed));
            let model = train_fit_model(&data, &ForestConfig { n_trees: 7, seed, ..Default::default() }).unwrap();
            for f in random_rows(20, seed + 1) {
                let x = f.to_array();
                let votes = model.trees.iter().filter(|t| t.vote(&x)).count();
                let p = model.predict(&f);
                prop_assert_eq!(p.probability, votes as f64 / 7.0);
                prop_assert_eq!(p.label, votes * 2 >= 7);
                prop_assert!((0.0..=1.0).contains(&p.probability));
            }
            let total: f64 = model.importances.0.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(model.importances.0.iter().all(|&v| v >= 0.0));
        }
    }
}
