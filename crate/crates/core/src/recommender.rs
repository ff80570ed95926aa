//! Per-learner preference weights and cosine ranking of candidate videos.
//!
//! A video is described by a 4-vector `X = [popularity, fit_probability,
//! norm_length, text_similarity]`. Each learner owns a weight vector `P` of
//! the same shape. `P` is fitted to satisfaction ratings `Y` by minimizing
//! the absolute-error loss `sum_i |P·X_i - Y_i|`, and candidates are ranked
//! by `cos(X, P)`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::cosine_slices;

pub const FEATURE_DIM: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum RecommenderError {
    #[error("loss is not finite: ratings or feature vectors contain NaN/inf")]
    NonFiniteLoss,
    #[error("no candidates left to rank")]
    NoCandidates,
}

/// `[popularity, fit_probability, norm_length, text_similarity]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVectorX(pub [f64; FEATURE_DIM]);

impl FeatureVectorX {
    pub fn new(popularity: f64, fit_probability: f64, norm_length: f64, text_similarity: f64) -> Self {
        Self([popularity, fit_probability, norm_length, text_similarity])
    }

    pub fn popularity(&self) -> f64 {
        self.0[0]
    }

    pub fn fit_probability(&self) -> f64 {
        self.0[1]
    }

    pub fn norm_length(&self) -> f64 {
        self.0[2]
    }

    pub fn text_similarity(&self) -> f64 {
        self.0[3]
    }
}

/// A learner's weights over the components of [`FeatureVectorX`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMatrixP(pub [f64; FEATURE_DIM]);

impl Default for PreferenceMatrixP {
    fn default() -> Self {
        Self::UNIFORM
    }
}

impl PreferenceMatrixP {
    pub const UNIFORM: Self = Self([0.25; FEATURE_DIM]);

    pub fn dot(&self, x: &FeatureVectorX) -> f64 {
        self.0.iter().zip(&x.0).map(|(p, x)| p * x).sum()
    }

    pub fn cosine(&self, x: &FeatureVectorX) -> f64 {
        cosine_slices(&self.0, &x.0).unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// One satisfaction rating of a recommended video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub user_id: String,
    pub video_id: String,
    pub skill: String,
    pub x: FeatureVectorX,
    /// Satisfaction in [0, 1].
    pub y: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Maps 1..=5 stars linearly onto [0, 1].
pub fn stars_to_satisfaction(stars: u8) -> f64 {
    (f64::from(stars) - 1.0) / 4.0
}

pub fn loss(p: &PreferenceMatrixP, events: &[RatingEvent]) -> f64 {
    events.iter().map(|e| (p.dot(&e.x) - e.y).abs()).sum()
}

/// `sum_i sign(P·X_i - Y_i) X_i` with `sign(0) = 0`.
pub fn subgradient(p: &PreferenceMatrixP, events: &[RatingEvent]) -> [f64; FEATURE_DIM] {
    let mut g = [0.0; FEATURE_DIM];
    for e in events {
        let r = p.dot(&e.x) - e.y;
        let s = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        g.iter_mut().zip(&e.x.0).for_each(|(gi, xi)| *gi += s * xi);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreferenceFitConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Stop once an epoch lowers the loss by less than this.
    pub tolerance: f64,
}

impl Default for PreferenceFitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 200,
            tolerance: 1e-8,
        }
    }
}

/// Halvings tried before an epoch gives up on finding a non-increasing step.
const MAX_HALVINGS: u32 = 30;

/// Full-batch subgradient descent on the absolute-error loss.
///
/// Each epoch steps along the negative subgradient with the configured rate;
/// if that would raise the loss, the step is halved until it does not. The
/// loss is therefore non-increasing from epoch to epoch. Iteration stops after
/// `epochs` steps, at a zero subgradient, when no step size helps, or when an
/// epoch improves the loss by less than `tolerance`.
pub fn fit_preferences(
    p0: PreferenceMatrixP,
    events: &[RatingEvent],
    config: &PreferenceFitConfig,
) -> Result<PreferenceMatrixP, RecommenderError> {
    fit_preferences_traced(p0, events, config).map(|(p, _)| p)
}

/// Like [`fit_preferences`], also returning the loss before the first epoch
/// and after every accepted epoch.
pub fn fit_preferences_traced(
    p0: PreferenceMatrixP,
    events: &[RatingEvent],
    config: &PreferenceFitConfig,
) -> Result<(PreferenceMatrixP, Vec<f64>), RecommenderError> {
    let finite = events.iter().all(|e| e.y.is_finite() && e.x.0.iter().all(|v| v.is_finite()));
    if !finite || !p0.is_finite() {
        return Err(RecommenderError::NonFiniteLoss);
    }
    let mut p = p0;
    let mut current = loss(&p, events);
    let mut trace = vec![current];
    if events.is_empty() {
        return Ok((p, trace));
    }

    for _ in 0..config.epochs {
        let g = subgradient(&p, events);
        if g.iter().all(|v| *v == 0.0) {
            break;
        }
        let mut step = config.learning_rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut candidate = p;
            candidate.0.iter_mut().zip(&g).for_each(|(w, gi)| *w -= step * gi);
            let l = loss(&candidate, events);
            if l <= current {
                accepted = Some((candidate, l));
                break;
            }
            step *= 0.5;
        }
        let Some((next, l)) = accepted else { break };
        let improvement = current - l;
        p = next;
        current = l;
        trace.push(l);
        if improvement < config.tolerance {
            break;
        }
    }
    Ok((p, trace))
}

/// Context attributes used to find similar learners.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerContext {
    pub occupation: String,
    pub location: String,
    pub education: String,
}

impl LearnerContext {
    pub fn new(occupation: &str, location: &str, education: &str) -> Self {
        Self {
            occupation: occupation.into(),
            location: location.into(),
            education: education.into(),
        }
    }

    /// True when at least one non-empty attribute matches (trimmed, case-insensitive).
    pub fn shares_attribute(&self, other: &LearnerContext) -> bool {
        let same = |a: &str, b: &str| {
            let (a, b) = (a.trim(), b.trim());
            !a.is_empty() && a.eq_ignore_ascii_case(b)
        };
        same(&self.occupation, &other.occupation)
            || same(&self.location, &other.location)
            || same(&self.education, &other.education)
    }
}

/// Cold-start weights: the mean `P` of peers sharing a context attribute,
/// or uniform weights when none does.
pub fn init_preferences<'a, I>(user: &LearnerContext, peers: I) -> PreferenceMatrixP
where
    I: IntoIterator<Item = (&'a LearnerContext, &'a PreferenceMatrixP)>,
{
    let mut sum = [0.0; FEATURE_DIM];
    let mut n = 0usize;
    for (ctx, p) in peers {
        if user.shares_attribute(ctx) {
            sum.iter_mut().zip(&p.0).for_each(|(s, v)| *s += v);
            n += 1;
        }
    }
    if n == 0 {
        return PreferenceMatrixP::UNIFORM;
    }
    PreferenceMatrixP(sum.map(|s| s / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub video_id: String,
    pub x: FeatureVectorX,
    pub score: f64,
}

/// Orders candidates by `cos(X, P)` descending, ties by ascending video id.
pub fn rank_candidates(
    p: &PreferenceMatrixP,
    candidates: &[(String, FeatureVectorX)],
    exclude: &HashSet<String>,
) -> Result<Vec<RankedCandidate>, RecommenderError> {
    let mut ranked: Vec<RankedCandidate> = candidates
        .iter()
        .filter(|(id, _)| !exclude.contains(id))
        .map(|(id, x)| RankedCandidate {
            video_id: id.clone(),
            x: *x,
            score: p.cosine(x),
        })
        .collect();
    if ranked.is_empty() {
        return Err(RecommenderError::NoCandidates);
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.video_id.cmp(&b.video_id)));
    Ok(ranked)
}
