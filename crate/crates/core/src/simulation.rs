//! Synthetic learners with a hidden preference vector `P*` who rate every
//! recommendation with `Y = clamp(P*·X + noise, 0, 1)`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Normal};
use serde::Serialize;

use crate::catalog::{Catalog, CatalogError, Level};
use crate::learner::{Engine, LearnerError, LearnerProfile};
use crate::recommender::{
    init_preferences, FeatureVectorX, LearnerContext, PreferenceMatrixP, FEATURE_DIM,
};
use crate::synth::learner_catalog;

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("invalid simulation setting: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub users: usize,
    pub rounds: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub skills: usize,
    pub videos_per_level: usize,
    /// Users of one archetype share an occupation, so later ones start from
    /// their predecessors' mean `P` instead of the uniform prior.
    pub shared_occupations: bool,
    pub shape: CatalogShape,
}

/// How the synthetic videos' feature vectors are distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CatalogShape {
    /// X computed from randomly drawn video records, so the four features
    /// vary independently.
    Independent,
    /// Each X spends a fixed budget: `2 * Dirichlet(2, 2, 2, 2)`, clipped
    /// to one. Videos trade one quality for another and no video is
    /// uniformly better than the rest.
    #[default]
    TradeOff,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            users: 20,
            rounds: 10,
            seed: 7,
            noise_sigma: 0.05,
            skills: 4,
            videos_per_level: 40,
            shared_occupations: false,
            shape: CatalogShape::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UserOutcome {
    pub id: String,
    pub true_p: [f64; FEATURE_DIM],
    pub learned_p: [f64; FEATURE_DIM],
    pub cosine: f64,
    /// `P*·X` of the recommendation served in each round.
    pub achieved: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub users: Vec<UserOutcome>,
    pub mean_cosine: f64,
    /// Mean `P*·X` over the first half of the rounds, then the second half.
    pub mean_achieved_early: f64,
    pub mean_achieved_late: f64,
    #[serde(serialize_with = "secs")]
    pub elapsed: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

const ARCHETYPES: [(&str, [f64; FEATURE_DIM]); 4] = [
    ("analyst", [0.6, 0.2, 0.1, 0.1]),
    ("engineer", [0.1, 0.6, 0.1, 0.2]),
    ("student", [0.1, 0.2, 0.6, 0.1]),
    ("researcher", [0.1, 0.1, 0.2, 0.6]),
];

fn cosine(a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]) -> f64 {
    crate::embeddings::cosine_slices(a, b).expect("equal dimensions")
}

fn dot(a: &[f64; FEATURE_DIM], x: &FeatureVectorX) -> f64 {
    a.iter().zip(x.0.iter()).map(|(p, x)| p * x).sum()
}

/// Engine over a synthetic catalog. Each video's fit probability is drawn
/// uniformly rather than predicted.
pub fn simulation_engine(config: &SimulationConfig) -> Result<Engine, SimulationError> {
    let skills: Vec<String> = (0..config.skills).map(|i| format!("skill-{i}")).collect();
    let catalog = Catalog::new(learner_catalog(&skills, config.videos_per_level, config.seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let fit: BTreeMap<String, f64> =
        catalog.videos().iter().map(|v| (v.id.clone(), rng.random_range(0.0..1.0))).collect();
    let budget = Dirichlet::new([2.0; FEATURE_DIM]).expect("valid concentration");
    let features = catalog
        .videos()
        .iter()
        .map(|v| {
            let x = match config.shape {
                CatalogShape::Independent => {
                    crate::catalog::build_feature_vector_x(v, catalog.group_of(v), fit[&v.id])
                }
                CatalogShape::TradeOff => {
                    let w: [f64; FEATURE_DIM] = budget.sample(&mut rng);
                    FeatureVectorX(std::array::from_fn(|i| (2.0 * w[i]).min(1.0)))
                }
            };
            (v.id.clone(), x)
        })
        .collect();
    Ok(Engine::new(catalog, features))
}

pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport, SimulationError> {
    if config.users == 0 || config.rounds < 2 {
        return Err(SimulationError::Config("need at least one user and two rounds".into()));
    }
    if !(config.noise_sigma >= 0.0 && config.noise_sigma.is_finite()) {
        return Err(SimulationError::Config(format!("noise sigma {}", config.noise_sigma)));
    }
    let start = Instant::now();
    let engine = simulation_engine(config)?;
    let skills: Vec<String> = engine.catalog.groups().keys().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| SimulationError::Config(e.to_string()))?;
    let jitter = Normal::new(0.0, 0.05).expect("valid sigma");

    let mut finished: Vec<LearnerProfile> = Vec::new();
    let mut outcomes = Vec::new();
    for u in 0..config.users {
        let (occupation, base) = ARCHETYPES[u % ARCHETYPES.len()];
        let mut true_p = base.map(|w| (w + jitter.sample(&mut rng)).max(0.0));
        let total: f64 = true_p.iter().sum();
        true_p.iter_mut().for_each(|w| *w /= total);

        let occupation = if config.shared_occupations { occupation.to_string() } else { format!("{occupation}-{u}") };
        let context = LearnerContext::new(&occupation, &format!("city-{u}"), &format!("school-{u}"));
        let p0: PreferenceMatrixP = init_preferences(&context, finished.iter().map(|p| (&p.context, &p.p)));
        let mut profile = LearnerProfile::new(format!("sim-{u:03}"), context, p0);
        for skill in &skills {
            profile.add_target(skill, Level::Beginner)?;
        }

        let mut achieved = Vec::with_capacity(config.rounds);
        for round in 0..config.rounds {
            let Some(rec) = skills
                .iter()
                .find_map(|s| engine.next_recommendation(&mut profile, s).ok())
            else {
                break;
            };
            let value = dot(&true_p, &rec.x);
            let y = (value + noise.sample(&mut rng)).clamp(0.0, 1.0);
            engine.record_feedback(&mut profile, &rec.video_id, y, round as u64)?;
            achieved.push(value);
        }

        outcomes.push(UserOutcome {
            id: profile.id.clone(),
            true_p,
            learned_p: profile.p.0,
            cosine: cosine(&profile.p.0, &true_p),
            achieved,
        });
        finished.push(profile);
    }

    let half = config.rounds / 2;
    let mean = |vals: Vec<f64>| if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
    let early = mean(outcomes.iter().flat_map(|o| o.achieved.iter().take(half).copied()).collect());
    let late = mean(outcomes.iter().flat_map(|o| o.achieved.iter().skip(half).copied()).collect());
    Ok(SimulationReport {
        mean_cosine: mean(outcomes.iter().map(|o| o.cosine).collect()),
        users: outcomes,
        mean_achieved_early: early,
        mean_achieved_late: late,
        elapsed: start.elapsed(),
    })
}
