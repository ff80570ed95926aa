//! Learner profiles and the recommend → watch → rate → update loop.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, Level};
use crate::recommender::{
    fit_preferences, rank_candidates, stars_to_satisfaction, FeatureVectorX, LearnerContext, PreferenceFitConfig,
    PreferenceMatrixP, RatingEvent, RecommenderError,
};

/// Satisfaction at or above this advances the learner one level
/// (4 of 5 stars).
pub const ADVANCE_THRESHOLD: f64 = 0.75;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("skill {0:?} is not a target of this learner")]
    UnknownTarget(String),
    #[error("skill {0:?} is already a target")]
    DuplicateTarget(String),
    #[error("skill {0:?} is already mastered")]
    SkillMastered(String),
    #[error("no videos left for skill {skill:?} at level {level}")]
    NoCandidates { skill: String, level: Level },
    #[error("video {0:?} is not an active recommendation")]
    UnknownVideo(String),
    #[error("rating {0} is outside 1..=5")]
    RatingOutOfRange(i64),
    #[error("satisfaction {0} is outside [0, 1]")]
    SatisfactionOutOfRange(f64),
    #[error(transparent)]
    Recommender(#[from] RecommenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub level: Level,
    pub mastered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerProfile {
    pub id: String,
    #[serde(flatten)]
    pub context: LearnerContext,
    pub targets: BTreeMap<String, Target>,
    /// Cold-start weights, kept so the history can be replayed.
    pub initial_p: PreferenceMatrixP,
    pub p: PreferenceMatrixP,
    pub history: Vec<RatingEvent>,
    pub skipped: BTreeSet<String>,
    /// Currently shown video per skill.
    pub active: BTreeMap<String, String>,
}

impl LearnerProfile {
    pub fn new(id: impl Into<String>, context: LearnerContext, initial_p: PreferenceMatrixP) -> Self {
        Self {
            id: id.into(),
            context,
            targets: BTreeMap::new(),
            initial_p,
            p: initial_p,
            history: Vec::new(),
            skipped: BTreeSet::new(),
            active: BTreeMap::new(),
        }
    }

    pub fn add_target(&mut self, skill: &str, level: Level) -> Result<(), LearnerError> {
        if self.targets.contains_key(skill) {
            return Err(LearnerError::DuplicateTarget(skill.to_string()));
        }
        self.targets.insert(skill.to_string(), Target { level, mastered: false });
        Ok(())
    }

    pub fn rated_ids(&self) -> impl Iterator<Item = &str> {
        self.history.iter().map(|e| e.video_id.as_str())
    }

    fn active_skill_for(&self, video_id: &str) -> Option<&str> {
        self.active.iter().find(|(_, v)| v.as_str() == video_id).map(|(s, _)| s.as_str())
    }
}

/// New level and mastery flag after a rating.
pub fn progress(target: Target, satisfaction: f64) -> Target {
    if target.mastered || satisfaction < ADVANCE_THRESHOLD {
        return target;
    }
    match target.level.next() {
        Some(level) => Target { level, mastered: false },
        None => Target { level: target.level, mastered: true },
    }
}

/// Recomputes `P` by refitting after every event in order, starting from
/// the cold-start weights. Equals the `p` maintained by [`Engine::record_feedback`].
pub fn replay_preferences(
    initial_p: PreferenceMatrixP,
    history: &[RatingEvent],
    config: &PreferenceFitConfig,
) -> Result<PreferenceMatrixP, RecommenderError> {
    let mut p = initial_p;
    for end in 1..=history.len() {
        p = fit_preferences(p, &history[..end], config)?;
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub video_id: String,
    pub skill: String,
    pub x: FeatureVectorX,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingOutcome {
    pub skill: String,
    pub level: Level,
    pub mastered: bool,
    pub p: PreferenceMatrixP,
}

/// The catalog together with each video's X, shared read-only by all learners.
#[derive(Debug, Clone)]
pub struct Engine {
    pub catalog: Catalog,
    pub features: BTreeMap<String, FeatureVectorX>,
    pub preference_fit: PreferenceFitConfig,
}

impl Engine {
    pub fn new(catalog: Catalog, features: BTreeMap<String, FeatureVectorX>) -> Self {
        Self {
            catalog,
            features,
            preference_fit: PreferenceFitConfig::default(),
        }
    }

    /// Videos of `skill` at `level` with their X, in catalog order.
    pub fn candidates(&self, skill: &str, level: Level) -> Vec<(String, FeatureVectorX)> {
        self.catalog
            .videos()
            .iter()
            .filter(|v| v.target_skill == skill && v.level == level)
            .filter_map(|v| self.features.get(&v.id).map(|x| (v.id.clone(), *x)))
            .collect()
    }

    /// Best-ranked unseen video for the learner's current level, which also
    /// becomes the active recommendation for that skill.
    pub fn next_recommendation(&self, profile: &mut LearnerProfile, skill: &str) -> Result<Recommendation, LearnerError> {
        let target = *profile
            .targets
            .get(skill)
            .ok_or_else(|| LearnerError::UnknownTarget(skill.to_string()))?;
        if target.mastered {
            return Err(LearnerError::SkillMastered(skill.to_string()));
        }
        let exclude: HashSet<String> = profile
            .rated_ids()
            .map(str::to_string)
            .chain(profile.skipped.iter().cloned())
            .collect();
        let candidates = self.candidates(skill, target.level);
        let best = match rank_candidates(&profile.p, &candidates, &exclude) {
            Ok(ranked) => ranked.into_iter().next().expect("non-empty ranking"),
            Err(RecommenderError::NoCandidates) => {
                return Err(LearnerError::NoCandidates { skill: skill.to_string(), level: target.level })
            }
            Err(e) => return Err(e.into()),
        };
        profile.active.insert(skill.to_string(), best.video_id.clone());
        Ok(Recommendation {
            video_id: best.video_id,
            skill: skill.to_string(),
            x: best.x,
            score: best.score,
        })
    }

    /// Star rating entry point: maps 1..=5 stars onto [0, 1].
    pub fn record_rating(
        &self,
        profile: &mut LearnerProfile,
        video_id: &str,
        stars: i64,
        timestamp: u64,
    ) -> Result<RatingOutcome, LearnerError> {
        if !(1..=5).contains(&stars) {
            return Err(LearnerError::RatingOutOfRange(stars));
        }
        self.record_feedback(profile, video_id, stars_to_satisfaction(stars as u8), timestamp)
    }

    /// Appends a rating for the active video, refits `P` over the full history
    /// (warm-started from the current `P`) and applies level progression.
    /// The profile is left untouched on error.
    pub fn record_feedback(
        &self,
        profile: &mut LearnerProfile,
        video_id: &str,
        satisfaction: f64,
        timestamp: u64,
    ) -> Result<RatingOutcome, LearnerError> {
        if !(0.0..=1.0).contains(&satisfaction) {
            return Err(LearnerError::SatisfactionOutOfRange(satisfaction));
        }
        let skill = profile
            .active_skill_for(video_id)
            .ok_or_else(|| LearnerError::UnknownVideo(video_id.to_string()))?
            .to_string();
        let x = *self
            .features
            .get(video_id)
            .ok_or_else(|| LearnerError::UnknownVideo(video_id.to_string()))?;
        let target = *profile
            .targets
            .get(&skill)
            .ok_or_else(|| LearnerError::UnknownTarget(skill.clone()))?;

        let mut history = profile.history.clone();
        history.push(RatingEvent {
            user_id: profile.id.clone(),
            video_id: video_id.to_string(),
            skill: skill.clone(),
            x,
            y: satisfaction,
            timestamp,
        });
        let p = fit_preferences(profile.p, &history, &self.preference_fit)?;
        let updated = progress(target, satisfaction);

        profile.history = history;
        profile.p = p;
        profile.targets.insert(skill.clone(), updated);
        profile.active.remove(&skill);
        Ok(RatingOutcome {
            skill,
            level: updated.level,
            mastered: updated.mastered,
            p,
        })
    }

    /// Marks the active video as unwanted. Skipping an already skipped video
    /// is a no-op.
    pub fn skip_recommendation(&self, profile: &mut LearnerProfile, video_id: &str) -> Result<(), LearnerError> {
        if profile.skipped.contains(video_id) {
            return Ok(());
        }
        let skill = profile
            .active_skill_for(video_id)
            .ok_or_else(|| LearnerError::UnknownVideo(video_id.to_string()))?
            .to_string();
        profile.active.remove(&skill);
        profile.skipped.insert(video_id.to_string());
        Ok(())
    }
}
