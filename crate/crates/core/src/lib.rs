//! Go-Explore for text games with two LLM-maintained world models: a global
//! analysis of the best trajectories found so far, used to pick where to
//! return to, and local advantage notes distilled from repeated attempts
//! from the same state, used to steer exploration.

pub mod env;
pub mod model;
pub mod llm;
pub mod world;
pub mod engine;
pub mod events;
pub mod variance;
pub mod experiment;
