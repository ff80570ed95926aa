//! fastText-style binary sentence classifier.
//!
//! Each sentence is represented by the mean of learned embeddings of its
//! hashed word n-grams; a logistic unit on top of that mean gives the
//! probability that the sentence states a skill requirement. Training is
//! plain SGD with a linearly decaying learning rate, single threaded and
//! driven by one seeded generator, so two runs with the same seed produce
//! bit-identical models.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledSentence, MiningError};
use crate::metrics::{Confusion, F1Score};
use crate::text::{ngrams_of, Sentence, STEMMER_VERSION};

pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub dim: usize,
    pub max_n: usize,
    pub buckets: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// The starting learning rate is 0.5: with 0.1 and five epochs the zero
/// initialised output layer barely moves on corpora of a few hundred sentences
/// and every sentence is predicted negative.
impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            max_n: 2,
            buckets: 1 << 20,
            epochs: 5,
            learning_rate: 0.5,
            seed: 42,
        }
    }
}

/// Trained classifier. Only buckets seen during training are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceClassifierModel {
    pub version: u32,
    pub stemmer_version: u32,
    pub config: ClassifierConfig,
    pub ngram_embeddings: BTreeMap<u64, Vec<f64>>,
    pub output_weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: bool,
}

/// A model together with the mean training log-loss after each epoch.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: SentenceClassifierModel,
    pub epoch_losses: Vec<f64>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn feature_buckets(sentence: &Sentence, max_n: usize, buckets: u64) -> Vec<u64> {
    ngrams_of(&sentence.tokens, max_n)
        .iter()
        .map(|g| fnv1a(g.text().as_bytes()) % buckets)
        .collect()
}

impl SentenceClassifierModel {
    /// An untrained model with no embeddings; predictions come from the bias.
    pub fn with_bias(config: ClassifierConfig, bias: f64) -> Self {
        Self {
            version: CLASSIFIER_FORMAT_VERSION,
            stemmer_version: STEMMER_VERSION,
            output_weights: vec![0.0; config.dim],
            config,
            ngram_embeddings: BTreeMap::new(),
            bias,
        }
    }

    fn hidden(&self, features: &[u64]) -> Vec<f64> {
        let mut h = vec![0.0; self.config.dim];
        let mut n = 0usize;
        for b in features {
            if let Some(v) = self.ngram_embeddings.get(b) {
                h.iter_mut().zip(v).for_each(|(a, x)| *a += x);
                n += 1;
            }
        }
        if n > 0 {
            h.iter_mut().for_each(|a| *a /= n as f64);
        }
        h
    }

    fn probability_of(&self, features: &[u64]) -> f64 {
        let h = self.hidden(features);
        let z: f64 = h.iter().zip(&self.output_weights).map(|(a, w)| a * w).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    pub fn predict(&self, sentence: &Sentence) -> Prediction {
        let features = feature_buckets(sentence, self.config.max_n, self.config.buckets);
        let probability = self.probability_of(&features);
        Prediction {
            probability,
            label: probability >= 0.5,
        }
    }

    pub fn to_json(&self) -> Result<String, MiningError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, MiningError> {
        let model: Self = serde_json::from_str(text)?;
        if model.version != CLASSIFIER_FORMAT_VERSION {
            return Err(MiningError::UnsupportedVersion {
                found: model.version,
                expected: CLASSIFIER_FORMAT_VERSION,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MiningError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MiningError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn classify_sentence(model: &SentenceClassifierModel, sentence: &Sentence) -> Prediction {
    model.predict(sentence)
}

pub fn train_sentence_classifier(
    data: &[LabeledSentence],
    config: &ClassifierConfig,
) -> Result<TrainedClassifier, MiningError> {
    let has_pos = data.iter().any(|d| d.label);
    let has_neg = data.iter().any(|d| !d.label);
    if !(has_pos && has_neg) {
        return Err(MiningError::SingleClassCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let features: Vec<Vec<u64>> = data
        .iter()
        .map(|d| feature_buckets(&d.sentence, config.max_n, config.buckets))
        .collect();

    let mut model = SentenceClassifierModel::with_bias(config.clone(), 0.0);
    let scale = 1.0 / config.dim as f64;
    let mut seen: Vec<u64> = features.iter().flatten().copied().collect();
    seen.sort_unstable();
    seen.dedup();
    for b in seen {
        let v = (0..config.dim).map(|_| rng.random_range(-scale..scale)).collect();
        model.ngram_embeddings.insert(b, v);
    }

    let total_steps = (config.epochs * data.len()).max(1) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let lr = config.learning_rate * (1.0 - step as f64 / total_steps);
            step += 1;
            sgd_step(&mut model, &features[i], data[i].label, lr);
        }
        epoch_losses.push(mean_log_loss(&model, &features, data));
    }

    Ok(TrainedClassifier { model, epoch_losses })
}

fn sgd_step(model: &mut SentenceClassifierModel, features: &[u64], label: bool, lr: f64) {
    let h = model.hidden(features);
    let z: f64 = h.iter().zip(&model.output_weights).map(|(a, w)| a * w).sum::<f64>() + model.bias;
    let g = sigmoid(z) - if label { 1.0 } else { 0.0 };

    let n = features.iter().filter(|b| model.ngram_embeddings.contains_key(b)).count();
    if n > 0 {
        let coeff = lr * g / n as f64;
        let grad_h: Vec<f64> = model.output_weights.iter().map(|w| coeff * w).collect();
        for b in features {
            if let Some(v) = model.ngram_embeddings.get_mut(b) {
                v.iter_mut().zip(&grad_h).for_each(|(x, d)| *x -= d);
            }
        }
    }
    model
        .output_weights
        .iter_mut()
        .zip(&h)
        .for_each(|(w, a)| *w -= lr * g * a);
    model.bias -= lr * g;
}

fn mean_log_loss(model: &SentenceClassifierModel, features: &[Vec<u64>], data: &[LabeledSentence]) -> f64 {
    let eps = 1e-12;
    let total: f64 = features
        .iter()
        .zip(data)
        .map(|(f, d)| {
            let p = model.probability_of(f).clamp(eps, 1.0 - eps);
            if d.label {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / data.len() as f64
}

pub fn evaluate_f1(model: &SentenceClassifierModel, test: &[LabeledSentence]) -> Result<F1Score, MiningError> {
    if test.is_empty() {
        return Err(MiningError::EmptyTestSet);
    }
    let confusion = Confusion::from_pairs(test.iter().map(|t| (model.predict(&t.sentence).label, t.label)));
    Ok(confusion.scores())
}
