//! Skill-driven recommendation of open educational videos: mining skill
//! requirements from job vacancies, scoring videos against them and adapting
//! the ranking to each learner's ratings.

pub mod catalog;
pub mod embeddings;
pub mod fit_model;
pub mod learner;
pub mod metrics;
pub mod recommender;
pub mod simulation;
pub mod skill_mining;
pub mod synth;
pub mod text;
