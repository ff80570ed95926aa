//! HTTP service, JSON store and demo data for the skill-driven recommender.

pub mod api;
pub mod demo;
pub mod store;
