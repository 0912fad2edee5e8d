//! Feature normalization, k-means, weighted-sum MCDA and the scoring agents.

pub mod agents;
pub mod features;
pub mod kmeans;
pub mod mcda;

pub use agents::{
    score_agents, score_community_agent, score_energy_agent, score_land_agent, score_water_agent,
    Agent, AgentScoreSet, ClusteredScores, CriteriaManifest,
};
pub use features::{normalize, Criterion, Direction, FeatureMatrix, NormalizedMatrix};
pub use kmeans::{derive_seed, kmeans, Clustering};
pub use mcda::{mcda_score, Weights};
