//! Coupled agent-based siting and production-stage life cycle accounting for
//! energy-transition pathways on a shared 10 km resource grid.

pub mod decision;
pub mod error;
pub mod fixture;
pub mod grid;
pub mod lca;
pub mod scenario;
pub mod scoring;
pub mod sim;

pub use decision::{
    integrate, run_portfolio, transition_decide, Decision, DeploymentRecord, IntegratedRanking,
    TraceStep,
};
pub use error::{Result, SitingError};
pub use fixture::Fixture;
pub use grid::{Grid, GridCell, GridSchema, LandType, Resource, WaterSource};
pub use lca::{
    pathway_impact, portfolio_impacts, regional_screen, Dimension, FactorTable, ImpactVector,
    LcaOptions, PathwayId, PathwaySpec, Portfolio, RegionalLimits, ScreeningReport,
};
pub use scenario::{eligibility_mask, ScenarioConfig, WalkPolicy};
pub use sim::{run_simulation, screen_only, simulate, RunReport, SimulationOutcome};
