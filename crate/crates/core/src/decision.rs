//! Integrated management and energy transition agents: fuse the agent scores
//! into a ranked site list, check each candidate against site-level
//! inventory, and walk the ranking deciding to deploy, scale down, relocate
//! or reject. Deployments debit the shared grid, so later pathways see the
//! reduced resources.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SitingError};
use crate::grid::{Grid, GridCell, Resource};
use crate::lca::{
    fixed_impact, pathway_impact, Dimension, FunctionalUnit, ImpactVector, PathwayId, PathwaySpec,
    Portfolio, ACCOUNTING_RESOLUTION,
};
use crate::scenario::{AgentWeights, ScenarioConfig, WalkPolicy};
use crate::scoring::{score_agents, AgentScoreSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedCell {
    pub cell_id: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedRanking {
    pub cells: Vec<RankedCell>,
    pub weights: AgentWeights,
}

impl IntegratedRanking {
    pub fn cell_ids(&self) -> Vec<u32> {
        self.cells.iter().map(|c| c.cell_id).collect()
    }

    fn sort(&mut self) {
        self.cells
            .sort_by(|a, b| b.score.total_cmp(&a.score).then(a.cell_id.cmp(&b.cell_id)));
    }
}

/// Weighted sum of the four agent scores over cells scored by the energy,
/// water and land agents, sorted best first with ties to the lower cell id.
pub fn integrate(scores: &AgentScoreSet, weights: &AgentWeights) -> IntegratedRanking {
    let mut cells: Vec<RankedCell> = scores
        .energy
        .iter()
        .filter_map(|(id, energy)| {
            let water = scores.water.get(id)?;
            let land = scores.land.get(id)?;
            let community = scores.community.get(id)?;
            let score = weights.energy * energy
                + weights.water * water
                + weights.land * land
                + weights.community * community;
            Some(RankedCell {
                cell_id: *id,
                score: score.clamp(0.0, 1.0),
            })
        })
        .collect();
    cells.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.cell_id.cmp(&b.cell_id)));
    IntegratedRanking {
        cells,
        weights: *weights,
    }
}

/// Hook for folding site impacts into the ranking as a soft penalty. The
/// default walk treats impacts purely as a feasibility gate.
pub trait ImpactPenalty {
    fn penalty(&self, pathway: &PathwaySpec, cell: &GridCell, impact: &ImpactVector) -> f64;
}

pub struct NoPenalty;

impl ImpactPenalty for NoPenalty {
    fn penalty(&self, _: &PathwaySpec, _: &GridCell, _: &ImpactVector) -> f64 {
        0.0
    }
}

/// Subtracts `penalty` of the full-capacity site impact from each score and re-sorts.
pub fn apply_penalty(
    mut ranking: IntegratedRanking,
    pathway: &PathwaySpec,
    capacity: f64,
    grid: &Grid,
    scenario: &ScenarioConfig,
    penalty: &dyn ImpactPenalty,
) -> Result<IntegratedRanking> {
    let impact = pathway_impact(pathway, capacity, &scenario.lca_options()).for_accounting();
    for entry in &mut ranking.cells {
        let cell = grid.cell(entry.cell_id)?;
        entry.score -= penalty.penalty(pathway, cell, &impact);
    }
    ranking.sort();
    Ok(ranking)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRatios {
    pub water: f64,
    pub land: f64,
    pub energy: f64,
}

impl FitRatios {
    pub fn dimensions(&self) -> [(Dimension, f64); 3] {
        [
            (Dimension::Water, self.water),
            (Dimension::Land, self.land),
            (Dimension::Energy, self.energy),
        ]
    }

    pub fn min(&self) -> f64 {
        self.water.min(self.land).min(self.energy)
    }
}

/// Site-level inventory of a pathway at a cell against what the cell can still supply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteFit {
    pub cell_id: u32,
    pub capacity: f64,
    pub demand: ImpactVector,
    /// Grid electricity drawn; zero unless the pathway burdens the grid.
    pub grid_energy_demand: f64,
    pub water_available: f64,
    pub land_available: f64,
    pub energy_available: f64,
    /// available / demand per dimension, infinite where nothing is demanded.
    pub ratios: FitRatios,
    pub binding: Option<Dimension>,
    pub feasible: bool,
}

fn grid_energy_demand(
    pathway: &PathwaySpec,
    demand: &ImpactVector,
    scenario: &ScenarioConfig,
) -> f64 {
    if pathway.requires_grid_energy && scenario.dle_dac_grid_burden {
        demand.energy_mwh
    } else {
        0.0
    }
}

pub fn evaluate_site(
    pathway: &PathwaySpec,
    capacity: f64,
    cell_id: u32,
    grid: &Grid,
    scenario: &ScenarioConfig,
) -> Result<SiteFit> {
    let cell = grid.cell(cell_id)?;
    let demand = pathway_impact(pathway, capacity, &scenario.lca_options()).for_accounting();
    let energy_demand = grid_energy_demand(pathway, &demand, scenario);
    let water_available = cell.water_total(&scenario.constraints.allowed_water_sources);
    let land_available = cell.land_total(&scenario.constraints.allowed_land_types);
    let energy_available = cell.available(Resource::GridEnergy);
    let ratio = |available: f64, demand: f64| {
        if demand > 0.0 {
            available / demand
        } else {
            f64::INFINITY
        }
    };
    let ratios = FitRatios {
        water: ratio(water_available, demand.water_m3),
        land: ratio(land_available, demand.land_m2),
        energy: ratio(energy_available, energy_demand),
    };
    let binding = ratios
        .dimensions()
        .into_iter()
        .filter(|(_, r)| *r < 1.0)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(d, _)| d);
    Ok(SiteFit {
        cell_id,
        capacity,
        demand,
        grid_energy_demand: energy_demand,
        water_available,
        land_available,
        energy_available,
        ratios,
        binding,
        feasible: binding.is_none(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Deploy { capacity: f64 },
    ScaleDown { from: f64, to: f64 },
    Relocate { next_cell: u32 },
    Reject { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub cell_id: Option<u32>,
    pub decision: Decision,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cell_id {
            Some(id) => write!(f, "{id}:")?,
            None => f.write_str("-:")?,
        }
        match self.decision {
            Decision::Deploy { .. } => f.write_str("deploy"),
            Decision::ScaleDown { from, to } => {
                write!(f, "scaledown:{}", format_fraction(to / from))
            }
            Decision::Relocate { .. } => f.write_str("relocate"),
            Decision::Reject { .. } => f.write_str("reject"),
        }
    }
}

fn format_fraction(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentRecord {
    pub step: u32,
    pub pathway: PathwayId,
    pub unit: FunctionalUnit,
    pub cell_id: Option<u32>,
    pub requested_capacity: f64,
    pub deployed_capacity: f64,
    pub residual_capacity: f64,
    pub site_impact: ImpactVector,
    pub trace: Vec<TraceStep>,
}

impl DeploymentRecord {
    /// Pipe-separated trace, e.g. `12:relocate|40:scaledown:0.8|40:deploy`.
    pub fn trace_string(&self) -> String {
        self.trace
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn quantum(pathway: &PathwaySpec, scenario: &ScenarioConfig) -> f64 {
    match pathway.functional_unit {
        FunctionalUnit::Mw => scenario.capacity_quantum_mw,
        FunctionalUnit::TonnePerYr => scenario.capacity_quantum_tonne,
    }
}

/// Largest capacity (at most `fit.capacity`) that the cell could host, ignoring quanta.
fn max_fitting_capacity(pathway: &PathwaySpec, fit: &SiteFit) -> f64 {
    let fixed = fixed_impact(pathway, fit.capacity);
    let dims = [
        (fit.demand.water_m3, fixed.water_m3, fit.water_available),
        (fit.demand.land_m2, fixed.land_m2, fit.land_available),
        (fit.grid_energy_demand, 0.0, fit.energy_available),
    ];
    let mut fraction: f64 = 1.0;
    for (demand, fixed, available) in dims {
        if demand <= available {
            continue;
        }
        let linear = demand - fixed;
        let f = if available < fixed || linear <= 0.0 {
            0.0
        } else {
            (available - fixed) / linear
        };
        fraction = fraction.min(f);
    }
    fit.capacity * fraction.clamp(0.0, 1.0)
}

/// Scaled-down capacity on the quantum grid that still fits, if any.
fn scaled_capacity(
    pathway: &PathwaySpec,
    fit: &SiteFit,
    grid: &Grid,
    scenario: &ScenarioConfig,
) -> Result<Option<f64>> {
    let q = quantum(pathway, scenario);
    let mut candidate = (max_fitting_capacity(pathway, fit) / q).floor() * q;
    if candidate >= fit.capacity {
        candidate = ((fit.capacity / q).ceil() - 1.0) * q;
    }
    for _ in 0..2 {
        if candidate <= 0.0 {
            return Ok(None);
        }
        if evaluate_site(pathway, candidate, fit.cell_id, grid, scenario)?.feasible {
            return Ok(Some(candidate));
        }
        candidate -= q;
    }
    Ok(None)
}

/// Splits a site demand over the cell's allowed sources and land types, in
/// canonical order. Partial draws are floored to the accounting resolution so
/// the parts sum exactly to the demand.
fn site_demands(
    cell: &GridCell,
    fit: &SiteFit,
    scenario: &ScenarioConfig,
) -> Option<Vec<(Resource, f64)>> {
    let mut demands = Vec::new();
    let mut split = |resources: Vec<Resource>, mut remaining: f64| -> bool {
        for r in resources {
            if remaining <= 0.0 {
                break;
            }
            let available = cell.available(r);
            let take = if remaining <= available {
                remaining
            } else {
                (available / ACCOUNTING_RESOLUTION).floor() * ACCOUNTING_RESOLUTION
            };
            if take > 0.0 {
                demands.push((r, take));
                remaining -= take;
            }
        }
        remaining <= 0.0
    };
    let water = scenario
        .constraints
        .allowed_water_sources
        .iter()
        .map(|s| Resource::Water(*s))
        .collect();
    let land = scenario
        .constraints
        .allowed_land_types
        .iter()
        .map(|t| Resource::Land(*t))
        .collect();
    if !split(water, fit.demand.water_m3) || !split(land, fit.demand.land_m2) {
        return None;
    }
    if fit.grid_energy_demand > 0.0 {
        demands.push((Resource::GridEnergy, fit.grid_energy_demand));
    }
    Some(demands)
}

fn commit(grid: &mut Grid, fit: &SiteFit, scenario: &ScenarioConfig) -> Result<bool> {
    let cell = grid.cell(fit.cell_id)?;
    let Some(demands) = site_demands(cell, fit, scenario) else {
        return Ok(false);
    };
    match grid.consume(fit.cell_id, &demands) {
        Ok(()) => Ok(true),
        Err(SitingError::Insufficient { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Walks the ranking for one pathway, committing at most one deployment.
/// Requested capacity always equals deployed plus residual.
pub fn transition_decide(
    pathway: &PathwaySpec,
    capacity: f64,
    ranking: &IntegratedRanking,
    grid: &mut Grid,
    scenario: &ScenarioConfig,
    step: u32,
) -> Result<DeploymentRecord> {
    grid.begin_step(step);
    let mut record = DeploymentRecord {
        step,
        pathway: pathway.id,
        unit: pathway.functional_unit,
        cell_id: None,
        requested_capacity: capacity,
        deployed_capacity: 0.0,
        residual_capacity: capacity,
        site_impact: ImpactVector::ZERO,
        trace: Vec::new(),
    };
    let reject = |record: &mut DeploymentRecord, cell_id: Option<u32>| {
        record.trace.push(TraceStep {
            cell_id,
            decision: Decision::Reject { residual: capacity },
        });
    };

    if capacity.is_nan() || capacity <= 0.0 || ranking.cells.is_empty() {
        reject(&mut record, None);
        return Ok(record);
    }

    let reach = ranking
        .cells
        .len()
        .min(scenario.max_relocations.saturating_add(1));
    let window = &ranking.cells[..reach];
    let fits = window
        .iter()
        .map(|c| evaluate_site(pathway, capacity, c.cell_id, grid, scenario))
        .collect::<Result<Vec<_>>>()?;
    let full_fit_target = match scenario.walk_policy {
        WalkPolicy::ExhaustFullFit => fits.iter().position(|f| f.feasible),
        WalkPolicy::FirstAcceptable => None,
    };

    for (i, fit) in fits.iter().enumerate() {
        let cell_id = fit.cell_id;
        let skip = full_fit_target.is_some_and(|t| i < t);
        if !skip {
            if fit.feasible && commit(grid, fit, scenario)? {
                record.trace.push(TraceStep {
                    cell_id: Some(cell_id),
                    decision: Decision::Deploy { capacity },
                });
                record.cell_id = Some(cell_id);
                record.deployed_capacity = capacity;
                record.residual_capacity = 0.0;
                record.site_impact = fit.demand;
                return Ok(record);
            }
            if !fit.feasible && fit.ratios.min() >= scenario.min_fraction {
                if let Some(to) = scaled_capacity(pathway, fit, grid, scenario)? {
                    let scaled = evaluate_site(pathway, to, cell_id, grid, scenario)?;
                    if commit(grid, &scaled, scenario)? {
                        record.trace.push(TraceStep {
                            cell_id: Some(cell_id),
                            decision: Decision::ScaleDown { from: capacity, to },
                        });
                        record.trace.push(TraceStep {
                            cell_id: Some(cell_id),
                            decision: Decision::Deploy { capacity: to },
                        });
                        record.cell_id = Some(cell_id);
                        record.deployed_capacity = to;
                        record.residual_capacity = capacity - to;
                        record.site_impact = scaled.demand;
                        return Ok(record);
                    }
                }
            }
        }
        match window.get(i + 1) {
            Some(next) => record.trace.push(TraceStep {
                cell_id: Some(cell_id),
                decision: Decision::Relocate {
                    next_cell: next.cell_id,
                },
            }),
            None => reject(&mut record, Some(cell_id)),
        }
    }
    Ok(record)
}

/// Sites one pathway against the current grid: score, rank, walk.
pub fn site_pathway(
    pathway: &PathwaySpec,
    grid: &mut Grid,
    scenario: &ScenarioConfig,
    step: u32,
    penalty: &dyn ImpactPenalty,
) -> Result<(IntegratedRanking, DeploymentRecord)> {
    let scores = score_agents(grid, pathway, scenario)?;
    let ranking = integrate(&scores, &scenario.agent_weights);
    let ranking = apply_penalty(
        ranking,
        pathway,
        pathway.proposed_capacity,
        grid,
        scenario,
        penalty,
    )?;
    let record = transition_decide(
        pathway,
        pathway.proposed_capacity,
        &ranking,
        grid,
        scenario,
        step,
    )?;
    Ok((ranking, record))
}

/// Processes pathways in portfolio order (or the scenario override),
/// rescoring against the updated grid before each one.
pub fn run_portfolio(
    portfolio: &Portfolio,
    grid: &mut Grid,
    scenario: &ScenarioConfig,
) -> Result<Vec<DeploymentRecord>> {
    run_portfolio_with(portfolio, grid, scenario, &NoPenalty)
}

pub fn run_portfolio_with(
    portfolio: &Portfolio,
    grid: &mut Grid,
    scenario: &ScenarioConfig,
    penalty: &dyn ImpactPenalty,
) -> Result<Vec<DeploymentRecord>> {
    let ordered = match &scenario.pathway_order {
        Some(order) => portfolio.reordered(order)?,
        None => portfolio.clone(),
    };
    let mut records = Vec::with_capacity(ordered.len());
    for (step, pathway) in ordered.pathways().iter().enumerate() {
        let (_, record) = site_pathway(pathway, grid, scenario, step as u32, penalty)?;
        records.push(record);
    }
    Ok(records)
}

/// Sum of deployed site impacts per cell, in record order.
pub fn cell_impacts(records: &[DeploymentRecord]) -> BTreeMap<u32, ImpactVector> {
    let mut out: BTreeMap<u32, ImpactVector> = BTreeMap::new();
    for r in records {
        if let Some(id) = r.cell_id {
            *out.entry(id).or_default() += r.site_impact;
        }
    }
    out
}
