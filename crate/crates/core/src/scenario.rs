//! Declarative scenario configuration: siting constraints, weights and
//! algorithm parameters for one run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SitingError};
use crate::grid::{Grid, LandType, WaterSource};
use crate::lca::{LcaOptions, PathwayId, PathwaySpec};
use crate::scoring::agents::passes_mask;
use crate::scoring::mcda::validate_simplex;
use crate::scoring::{Agent, CriteriaManifest};

pub const BASELINE_TOML: &str = include_str!("../data/scenarios/baseline.toml");
pub const UNCONSTRAINED_TOML: &str = include_str!("../data/scenarios/unconstrained.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constraints {
    pub allowed_water_sources: Vec<WaterSource>,
    pub allowed_land_types: Vec<LandType>,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            allowed_water_sources: WaterSource::ALL.to_vec(),
            allowed_land_types: LandType::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentWeights {
    pub energy: f64,
    pub water: f64,
    pub land: f64,
    pub community: f64,
}

impl Default for AgentWeights {
    fn default() -> Self {
        AgentWeights {
            energy: 0.25,
            water: 0.25,
            land: 0.25,
            community: 0.25,
        }
    }
}

impl AgentWeights {
    pub fn get(&self, agent: Agent) -> f64 {
        match agent {
            Agent::Energy => self.energy,
            Agent::Water => self.water,
            Agent::Land => self.land,
            Agent::Community => self.community,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_simplex(
            "agent_weights",
            [self.energy, self.water, self.land, self.community],
        )
    }
}

/// Per-agent criterion weight overrides; absent agents use the manifest defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionWeights {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub water: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub land: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub community: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkPolicy {
    /// Deploy, possibly scaled down, at the first cell that can take at least `min_fraction`.
    #[serde(rename = "first-acceptable")]
    FirstAcceptable,
    /// Relocate to the first cell that fits the full capacity if one is
    /// within reach, otherwise behave as `first-acceptable`.
    #[serde(rename = "exhaust-full-fit")]
    ExhaustFullFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub k: usize,
    pub max_iter: usize,
    pub cluster_blend: f64,
    pub capacity_factor: f64,
    pub capture_composition: bool,
    pub dle_dac_grid_burden: bool,
    pub min_fraction: f64,
    pub max_relocations: usize,
    pub walk_policy: WalkPolicy,
    pub capacity_quantum_mw: f64,
    pub capacity_quantum_tonne: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathway_order: Option<Vec<PathwayId>>,
    pub constraints: Constraints,
    pub agent_weights: AgentWeights,
    pub criterion_weights: CriterionWeights,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            k: 5,
            max_iter: 100,
            cluster_blend: 0.5,
            capacity_factor: 0.35,
            capture_composition: true,
            dle_dac_grid_burden: true,
            min_fraction: 0.1,
            max_relocations: 20,
            walk_policy: WalkPolicy::FirstAcceptable,
            capacity_quantum_mw: 1.0,
            capacity_quantum_tonne: 1000.0,
            pathway_order: None,
            constraints: Constraints::default(),
            agent_weights: AgentWeights::default(),
            criterion_weights: CriterionWeights::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SitingError::io(path, e))?;
        ScenarioConfig::from_toml_str(&text)
    }

    pub fn baseline() -> Self {
        ScenarioConfig::from_toml_str(BASELINE_TOML).expect("shipped baseline preset is valid")
    }

    pub fn unconstrained() -> Self {
        ScenarioConfig::from_toml_str(UNCONSTRAINED_TOML)
            .expect("shipped unconstrained preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "baseline" => Some(ScenarioConfig::baseline()),
            "unconstrained" => Some(ScenarioConfig::unconstrained()),
            _ => None,
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SitingError::Serialize(e.to_string()))
    }

    pub fn lca_options(&self) -> LcaOptions {
        LcaOptions {
            capacity_factor: self.capacity_factor,
            capture_composition: self.capture_composition,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constraints;
        if c.allowed_water_sources.is_empty() {
            return Err(SitingError::invalid(
                "constraints.allowed_water_sources",
                "must not be empty",
            ));
        }
        if c.allowed_land_types.is_empty() {
            return Err(SitingError::invalid(
                "constraints.allowed_land_types",
                "must not be empty",
            ));
        }
        if c.allowed_water_sources
            .iter()
            .collect::<BTreeSet<_>>()
            .len()
            != c.allowed_water_sources.len()
        {
            return Err(SitingError::invalid(
                "constraints.allowed_water_sources",
                "duplicate entry",
            ));
        }
        if c.allowed_land_types.iter().collect::<BTreeSet<_>>().len() != c.allowed_land_types.len()
        {
            return Err(SitingError::invalid(
                "constraints.allowed_land_types",
                "duplicate entry",
            ));
        }
        self.agent_weights.validate()?;

        let manifest = CriteriaManifest::embedded();
        for (agent, weights) in [
            (Agent::Water, &self.criterion_weights.water),
            (Agent::Land, &self.criterion_weights.land),
        ] {
            if let Some(map) = weights {
                let field = format!("criterion_weights.{}", agent.as_str());
                crate::scoring::Weights::new(&field, map.clone())?
                    .aligned(&field, &manifest.criterion_names(agent))?;
            }
        }
        if let Some(map) = &self.criterion_weights.community {
            validate_simplex("criterion_weights.community", map.values().copied())?;
        }

        if self.k == 0 {
            return Err(SitingError::invalid("k", "must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(SitingError::invalid("max_iter", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.cluster_blend) {
            return Err(SitingError::invalid("cluster_blend", "must lie in [0, 1]"));
        }
        if !(self.capacity_factor > 0.0 && self.capacity_factor <= 1.0) {
            return Err(SitingError::invalid(
                "capacity_factor",
                "must lie in (0, 1]",
            ));
        }
        if !(self.min_fraction > 0.0 && self.min_fraction <= 1.0) {
            return Err(SitingError::invalid("min_fraction", "must lie in (0, 1]"));
        }
        for (field, q) in [
            ("capacity_quantum_mw", self.capacity_quantum_mw),
            ("capacity_quantum_tonne", self.capacity_quantum_tonne),
        ] {
            if !(q > 0.0 && q.is_finite()) {
                return Err(SitingError::invalid(field, "must be positive and finite"));
            }
        }
        if let Some(order) = &self.pathway_order {
            if order.iter().collect::<BTreeSet<_>>().len() != order.len() {
                return Err(SitingError::invalid("pathway_order", "duplicate pathway"));
            }
        }
        Ok(())
    }
}

/// Cells where a pathway may be sited: allowed water and land present,
/// siting mask satisfied and positive potential for the pathway's resource.
pub fn eligibility_mask(
    scenario: &ScenarioConfig,
    grid: &Grid,
    pathway: &PathwaySpec,
) -> BTreeSet<u32> {
    let resource = pathway.id.energy_resource();
    grid.cells()
        .iter()
        .filter(|c| c.water_total(&scenario.constraints.allowed_water_sources) > 0.0)
        .filter(|c| c.land_total(&scenario.constraints.allowed_land_types) > 0.0)
        .filter(|c| passes_mask(c, pathway.siting_mask))
        .filter(|c| c.available(resource) > 0.0)
        .map(|c| c.cell_id)
        .collect()
}
