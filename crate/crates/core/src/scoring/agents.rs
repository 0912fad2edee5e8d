//! The four resource and community agents. Each turns grid layers into a
//! per-cell suitability in [0, 1] over the cells it considers eligible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{normalize, Criterion, Direction, FeatureMatrix, NormalizedMatrix};
use super::kmeans::{derive_seed, kmeans};
use super::mcda::{weighted_sum, Weights};
use crate::error::{Result, SitingError};
use crate::grid::{Grid, GridCell, Resource};
use crate::lca::{PathwaySpec, SitingMask};
use crate::scenario::ScenarioConfig;

pub const EMBEDDED_CRITERIA: &str = include_str!("../../data/criteria.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Energy,
    Water,
    Land,
    Community,
}

impl Agent {
    pub fn as_str(self) -> &'static str {
        match self {
            Agent::Energy => "energy",
            Agent::Water => "water",
            Agent::Land => "land",
            Agent::Community => "community",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ManifestEntry {
    pub criterion: String,
    pub agent: Agent,
    pub direction: Direction,
    pub default_weight: f64,
}

/// Criterion names, directions and default weights for each agent.
#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaManifest {
    entries: Vec<ManifestEntry>,
}

impl CriteriaManifest {
    pub fn embedded() -> Self {
        CriteriaManifest::from_csv_str(EMBEDDED_CRITERIA)
            .expect("shipped criteria manifest is valid")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let entries = rdr
            .deserialize::<ManifestEntry>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let manifest = CriteriaManifest { entries };
        for agent in [Agent::Energy, Agent::Water, Agent::Land] {
            manifest.default_weights(agent)?;
        }
        Ok(manifest)
    }

    pub fn criteria(&self, agent: Agent) -> Vec<Criterion> {
        self.entries
            .iter()
            .filter(|e| e.agent == agent)
            .map(|e| Criterion::new(e.criterion.clone(), e.direction))
            .collect()
    }

    pub fn default_weights(&self, agent: Agent) -> Result<Weights> {
        Weights::new(
            &format!("criteria manifest {}", agent.as_str()),
            self.entries
                .iter()
                .filter(|e| e.agent == agent)
                .map(|e| (e.criterion.clone(), e.default_weight))
                .collect(),
        )
    }

    pub fn criterion_names(&self, agent: Agent) -> Vec<String> {
        self.criteria(agent).into_iter().map(|c| c.name).collect()
    }
}

/// Per-cell scores of the four agents for one pathway. A cell missing from
/// a map is ineligible for that agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentScoreSet {
    pub energy: BTreeMap<u32, f64>,
    pub water: BTreeMap<u32, f64>,
    pub land: BTreeMap<u32, f64>,
    pub community: BTreeMap<u32, f64>,
}

/// Normalized features blended with the rank of each cell's k-means cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredScores {
    pub scores: BTreeMap<u32, f64>,
    pub own: BTreeMap<u32, f64>,
    /// Cluster index per row, in row order.
    pub clusters: Vec<usize>,
    /// Rank score per cluster index; `None` for clusters without members.
    pub cluster_rank_scores: Vec<Option<f64>>,
}

pub fn passes_mask(cell: &GridCell, mask: Option<SitingMask>) -> bool {
    match mask {
        None => true,
        Some(SitingMask::DacCandidate) => cell.dac_candidate,
        Some(SitingMask::GeothermalCandidate) => cell.geothermal_candidate,
    }
}

fn min_max_scores(values: &[(u32, f64)]) -> BTreeMap<u32, f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| {
            (lo.min(*v), hi.max(*v))
        });
    values
        .iter()
        .map(|(id, v)| (*id, if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }))
        .collect()
}

/// Cells with positive potential for the pathway's resource that pass its
/// siting mask, scored by min-max normalized potential.
pub fn score_energy_agent(grid: &Grid, pathway: &PathwaySpec) -> BTreeMap<u32, f64> {
    let resource = pathway.id.energy_resource();
    let potentials: Vec<(u32, f64)> = grid
        .cells()
        .iter()
        .filter(|c| c.available(resource) > 0.0 && passes_mask(c, pathway.siting_mask))
        .map(|c| (c.cell_id, c.available(resource)))
        .collect();
    min_max_scores(&potentials)
}

/// Water criteria for every cell holding some allowed-source water.
/// Indicators are volume-weighted across allowed sources; supplier counts add up.
pub fn water_features(grid: &Grid, scenario: &ScenarioConfig) -> Result<FeatureMatrix> {
    let manifest = CriteriaManifest::embedded();
    let criteria = manifest.criteria(Agent::Water);
    let sources = &scenario.constraints.allowed_water_sources;
    let mut matrix = FeatureMatrix::new(criteria.clone())?;
    for cell in grid.cells() {
        let volume = cell.water_total(sources);
        if volume <= 0.0 {
            continue;
        }
        let weighted = |get: fn(&crate::grid::WaterFeatures) -> Option<f64>| {
            let mut num = 0.0;
            let mut den = 0.0;
            for s in sources {
                let v = cell.available(Resource::Water(*s));
                if let (true, Some(x)) = (v > 0.0, get(cell.water_features(*s))) {
                    num += v * x;
                    den += v;
                }
            }
            (den > 0.0).then(|| num / den)
        };
        let suppliers = sources
            .iter()
            .filter_map(|s| cell.water_features(*s).suppliers)
            .fold(None, |acc: Option<f64>, v| Some(acc.unwrap_or(0.0) + v));
        let row = criteria
            .iter()
            .map(|c| match c.name.as_str() {
                "volume" => Ok(Some(volume)),
                "stress" => Ok(weighted(|f| f.stress)),
                "quality_risk" => Ok(weighted(|f| f.quality_risk)),
                "industrial_ratio" => Ok(weighted(|f| f.industrial_ratio)),
                "suppliers" => Ok(suppliers),
                other => Err(SitingError::invalid(
                    "criteria manifest",
                    format!("unknown water criterion {other}"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        matrix.push_row(cell.cell_id, row);
    }
    Ok(matrix)
}

/// Land criteria for every cell holding some allowed land type.
pub fn land_features(grid: &Grid, scenario: &ScenarioConfig) -> Result<FeatureMatrix> {
    let manifest = CriteriaManifest::embedded();
    let criteria = manifest.criteria(Agent::Land);
    let types = &scenario.constraints.allowed_land_types;
    let mut matrix = FeatureMatrix::new(criteria.clone())?;
    for cell in grid.cells() {
        let area = cell.land_total(types);
        if area <= 0.0 {
            continue;
        }
        let eco = &cell.ecological;
        let row = criteria
            .iter()
            .map(|c| match c.name.as_str() {
                "area" => Ok(Some(area)),
                "biodiversity" => Ok(Some(eco.biodiversity)),
                "connectivity" => Ok(Some(eco.connectivity)),
                "habitat" => Ok(Some(eco.habitat)),
                "climate_resilience" => Ok(Some(eco.climate_resilience)),
                other => Err(SitingError::invalid(
                    "criteria manifest",
                    format!("unknown land criterion {other}"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        matrix.push_row(cell.cell_id, row);
    }
    Ok(matrix)
}

/// Scores rows by `(1 - blend) * own MCDA + blend * cluster rank`, where
/// clusters are ranked by the MCDA of their centroids and the best cluster
/// gets rank score 1, the worst 0.
pub fn cluster_mcda(
    features: &NormalizedMatrix,
    weights: &Weights,
    k: usize,
    seed: u64,
    max_iter: usize,
    blend: f64,
) -> Result<ClusteredScores> {
    if features.is_empty() {
        return Ok(ClusteredScores {
            scores: BTreeMap::new(),
            own: BTreeMap::new(),
            clusters: Vec::new(),
            cluster_rank_scores: Vec::new(),
        });
    }
    let w = weights.aligned("criterion weights", &features.names)?;
    let k = k.min(features.len());
    let clustering = kmeans(&features.rows, k, seed, max_iter)?;

    let mut members = vec![0usize; k];
    for &j in &clustering.assignments {
        members[j] += 1;
    }
    let mut ranked: Vec<(usize, f64)> = (0..k)
        .filter(|j| members[*j] > 0)
        .map(|j| (j, weighted_sum(&clustering.centroids[j], &w)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    // dense ranking: clusters with equal centroid scores share a rank
    let mut distinct: Vec<f64> = ranked.iter().map(|r| r.1).collect();
    distinct.dedup();
    let m = distinct.len();
    let mut cluster_rank_scores = vec![None; k];
    for (j, score) in &ranked {
        let rank = distinct
            .iter()
            .position(|d| d == score)
            .expect("score is listed");
        cluster_rank_scores[*j] = Some(if m > 1 {
            1.0 - rank as f64 / (m - 1) as f64
        } else {
            1.0
        });
    }

    let mut scores = BTreeMap::new();
    let mut own = BTreeMap::new();
    for ((id, row), &j) in features
        .row_ids
        .iter()
        .zip(&features.rows)
        .zip(&clustering.assignments)
    {
        let own_score = weighted_sum(row, &w);
        let rank_score = cluster_rank_scores[j].expect("assigned cluster has members");
        let blended = ((1.0 - blend) * own_score + blend * rank_score).clamp(0.0, 1.0);
        own.insert(*id, own_score);
        scores.insert(*id, blended);
    }
    Ok(ClusteredScores {
        scores,
        own,
        clusters: clustering.assignments,
        cluster_rank_scores,
    })
}

fn criterion_weights(scenario: &ScenarioConfig, agent: Agent, names: &[String]) -> Result<Weights> {
    let field = format!("criterion_weights.{}", agent.as_str());
    let configured = match agent {
        Agent::Water => scenario.criterion_weights.water.as_ref(),
        Agent::Land => scenario.criterion_weights.land.as_ref(),
        Agent::Community => scenario.criterion_weights.community.as_ref(),
        Agent::Energy => None,
    };
    let weights = match configured {
        Some(map) => Weights::new(&field, map.clone())?,
        None if agent == Agent::Community => Weights::equal(names),
        None => CriteriaManifest::embedded().default_weights(agent)?,
    };
    weights.aligned(&field, names)?;
    Ok(weights)
}

pub fn score_water_agent(grid: &Grid, scenario: &ScenarioConfig) -> Result<ClusteredScores> {
    score_clustered(scenario, Agent::Water, water_features(grid, scenario)?)
}

pub fn score_land_agent(grid: &Grid, scenario: &ScenarioConfig) -> Result<ClusteredScores> {
    score_clustered(scenario, Agent::Land, land_features(grid, scenario)?)
}

fn score_clustered(
    scenario: &ScenarioConfig,
    agent: Agent,
    features: FeatureMatrix,
) -> Result<ClusteredScores> {
    let normalized = normalize(&features);
    let weights = criterion_weights(scenario, agent, &normalized.names)?;
    cluster_mcda(
        &normalized,
        &weights,
        scenario.k,
        derive_seed(scenario.seed, agent.as_str()),
        scenario.max_iter,
        scenario.cluster_blend,
    )
}

/// One minus the weighted burden, so the least burdened cell scores 1.
/// Every cell is eligible; without indicators every cell scores 0.5.
pub fn score_community_agent(grid: &Grid, scenario: &ScenarioConfig) -> Result<BTreeMap<u32, f64>> {
    let names = grid.burden_names();
    if names.is_empty() {
        return Ok(grid.cells().iter().map(|c| (c.cell_id, 0.5)).collect());
    }
    let criteria = names
        .iter()
        .map(|n| Criterion::new(n.clone(), Direction::Benefit))
        .collect();
    let mut matrix = FeatureMatrix::new(criteria)?;
    for cell in grid.cells() {
        matrix.push_row(cell.cell_id, cell.burden.clone());
    }
    let normalized = normalize(&matrix);
    let weights = criterion_weights(scenario, Agent::Community, names)?;
    let w = weights.aligned("criterion_weights.community", names)?;
    Ok(normalized
        .row_ids
        .iter()
        .zip(&normalized.rows)
        .map(|(id, row)| (*id, 1.0 - weighted_sum(row, &w)))
        .collect())
}

pub fn score_agents(
    grid: &Grid,
    pathway: &PathwaySpec,
    scenario: &ScenarioConfig,
) -> Result<AgentScoreSet> {
    Ok(AgentScoreSet {
        energy: score_energy_agent(grid, pathway),
        water: score_water_agent(grid, scenario)?.scores,
        land: score_land_agent(grid, scenario)?.scores,
        community: score_community_agent(grid, scenario)?,
    })
}
