#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siting_core::grid::{EnergyCategory, GridCell, LandType, Resource, WaterSource};
use siting_core::{FactorTable, Grid, PathwayId, PathwaySpec, Portfolio};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn cell(id: u32, cols: u32) -> GridCell {
    GridCell::new(
        id,
        (id % cols) as f64 * 10.0 + 5.0,
        (id / cols) as f64 * 10.0 + 5.0,
    )
}

/// Random portfolio over a random subset of pathways, in canonical order.
pub fn random_portfolio(rng: &mut ChaCha8Rng) -> Portfolio {
    let table = FactorTable::embedded();
    let mut specs = Vec::new();
    for id in PathwayId::ALL {
        if rng.gen_bool(0.7) {
            let cap = match id.functional_unit() {
                siting_core::lca::FunctionalUnit::Mw => rng.gen_range(1..400) as f64,
                siting_core::lca::FunctionalUnit::TonnePerYr => {
                    rng.gen_range(1..150) as f64 * 1000.0
                }
            };
            specs.push(PathwaySpec::new(id, cap, &table).unwrap());
        }
    }
    if specs.is_empty() {
        specs.push(PathwaySpec::new(PathwayId::Dac, 10_000.0, &table).unwrap());
    }
    Portfolio::new(specs).unwrap()
}

/// Random `cols x rows` grid with every layer populated and occasional zeros.
pub fn random_grid(rng: &mut ChaCha8Rng, cols: u32, rows: u32) -> Grid {
    let mut cells = Vec::new();
    for id in 0..cols * rows {
        let mut c = cell(id, cols);
        for r in Resource::ALL {
            let scale = match r {
                Resource::Energy(EnergyCategory::AnimalWaste) => 20.0,
                Resource::Energy(_) => 800.0,
                Resource::Water(_) => 3e7,
                Resource::Land(_) => 3e7,
                Resource::GridEnergy => 1e7,
            };
            let v = if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..scale)
            };
            c = c.with_available(r, v);
        }
        for s in WaterSource::ALL {
            let f = &mut c.water_features[s as usize];
            f.stress = rng.gen_bool(0.9).then(|| rng.gen_range(0.0..5.0));
            f.quality_risk = Some(rng.gen_range(0.0..1.0));
            f.industrial_ratio = Some(rng.gen_range(0.0..1.0));
            f.suppliers = Some(rng.gen_range(0..30) as f64);
        }
        c.ecological.biodiversity = rng.gen_range(0.0..1.0);
        c.ecological.connectivity = rng.gen_range(0.0..1.0);
        c.ecological.habitat = rng.gen_range(0.0..1.0);
        c.ecological.climate_resilience = rng.gen_range(0.0..1.0);
        c.burden = vec![
            Some(rng.gen_range(0.0..100.0)),
            Some(rng.gen_range(0.0..1.0)),
        ];
        c.dac_candidate = rng.gen_bool(0.4);
        c.geothermal_candidate = rng.gen_bool(0.4);
        cells.push(c);
    }
    Grid::new(cells, vec!["burden_1".into(), "burden_2".into()]).unwrap()
}

pub fn all_land() -> Vec<LandType> {
    LandType::ALL.to_vec()
}

/// Cell ids sorted by descending score, ties to the lower id.
pub fn ranking(scores: &std::collections::BTreeMap<u32, f64>) -> Vec<u32> {
    let mut v: Vec<(u32, f64)> = scores.iter().map(|(k, s)| (*k, *s)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(k, _)| k).collect()
}

pub fn dot(row: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..row.len() {
        acc += row[i] * w[i];
    }
    acc
}

pub mod checks {
    use std::collections::BTreeMap;

    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use siting_core::decision::{site_pathway, NoPenalty};
    use siting_core::grid::{Resource, WaterSource};
    use siting_core::scoring::agents::{cluster_mcda, land_features, water_features};
    use siting_core::scoring::{
        derive_seed, kmeans, mcda_score, normalize, Agent, CriteriaManifest, FeatureMatrix, Weights,
    };
    use siting_core::{Decision, Grid, Portfolio, ScenarioConfig};

    use super::{dot, ranking};

    fn clustered(
        features: &FeatureMatrix,
        agent: Agent,
        scenario: &ScenarioConfig,
    ) -> BTreeMap<u32, f64> {
        let weights = CriteriaManifest::embedded().default_weights(agent).unwrap();
        cluster_mcda(
            &normalize(features),
            &weights,
            scenario.k,
            derive_seed(scenario.seed, agent.as_str()),
            scenario.max_iter,
            scenario.cluster_blend,
        )
        .unwrap()
        .scores
    }

    /// Integer-valued raw features with a power-of-two scale and integer
    /// offset keep every normalized value bit-identical, so the ranking must
    /// match exactly.
    pub fn affine_ranking_invariance(
        grid: &Grid,
        scenario: &ScenarioConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), String> {
        let round = |mut m: FeatureMatrix| {
            for c in 0..m.criteria().len() {
                m.map_column(c, |x| (x * 1000.0).round());
            }
            m
        };
        for (agent, raw) in [
            (Agent::Water, water_features(grid, scenario).unwrap()),
            (Agent::Land, land_features(grid, scenario).unwrap()),
        ] {
            if raw.is_empty() {
                continue;
            }
            let base = round(raw);
            let column = rng.gen_range(0..base.criteria().len());
            let a = f64::powi(2.0, rng.gen_range(-3..6));
            let b = rng.gen_range(-1000..1000) as f64;
            let mut moved = base.clone();
            moved.map_column(column, |x| a * x + b);
            let before = ranking(&clustered(&base, agent, scenario));
            let after = ranking(&clustered(&moved, agent, scenario));
            if before != after {
                return Err(format!(
                    "{agent:?} ranking changed under {a}x+{b} on column {column}"
                ));
            }
        }
        Ok(())
    }

    /// General affine maps on the direct MCDA path; pairs closer than 1e-9 count as ties.
    pub fn affine_mcda_ranking_invariance(rng: &mut ChaCha8Rng) -> Result<(), String> {
        use siting_core::scoring::{Criterion, Direction};
        let n = rng.gen_range(2..30);
        let m = rng.gen_range(1..6);
        let criteria: Vec<Criterion> = (0..m)
            .map(|j| {
                Criterion::new(
                    format!("c{j}"),
                    if rng.gen_bool(0.5) {
                        Direction::Benefit
                    } else {
                        Direction::Cost
                    },
                )
            })
            .collect();
        let weights = Weights::equal(&criteria.iter().map(|c| c.name.clone()).collect::<Vec<_>>());
        let mut base = FeatureMatrix::new(criteria).unwrap();
        for i in 0..n {
            base.push_row(
                i,
                (0..m).map(|_| Some(rng.gen_range(-100.0..100.0))).collect(),
            );
        }
        let column = rng.gen_range(0..m);
        let a = rng.gen_range(0.01..100.0);
        let b = rng.gen_range(-1e3..1e3);
        let mut moved = base.clone();
        moved.map_column(column, |x| a * x + b);
        let s0 = mcda_score(&normalize(&base), &weights).unwrap();
        let s1 = mcda_score(&normalize(&moved), &weights).unwrap();
        for (i, x0) in &s0 {
            for (j, y0) in &s0 {
                if x0 - y0 > 1e-9 && s1[i] <= s1[j] {
                    return Err(format!("order of {i} and {j} flipped"));
                }
            }
        }
        Ok(())
    }

    pub fn kmeans_determinism_and_inertia(
        points: &[Vec<f64>],
        k: usize,
        seed: u64,
    ) -> Result<(), String> {
        let a = kmeans(points, k, seed, 100).map_err(|e| e.to_string())?;
        let b = kmeans(points, k, seed, 100).map_err(|e| e.to_string())?;
        if a.assignments != b.assignments || a.inertia.to_bits() != b.inertia.to_bits() {
            return Err("k-means not deterministic".into());
        }
        for w in a.history.windows(2) {
            if w[1] > w[0] * (1.0 + 1e-12) {
                return Err(format!("inertia rose from {} to {}", w[0], w[1]));
            }
        }
        Ok(())
    }

    pub fn mcda_matches_dot_product(
        features: &FeatureMatrix,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), String> {
        let norm = normalize(features);
        let mut raw: Vec<f64> = norm.names.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|w| *w /= total);
        let map: BTreeMap<String, f64> = norm
            .names
            .iter()
            .cloned()
            .zip(raw.iter().copied())
            .collect();
        let Ok(weights) = Weights::new("w", map) else {
            return Ok(());
        };
        let scores = mcda_score(&norm, &weights).map_err(|e| e.to_string())?;
        for (id, row) in norm.row_ids.iter().zip(&norm.rows) {
            let oracle = dot(row, &raw);
            if (scores[id] - oracle).abs() > 1e-12 {
                return Err(format!("cell {id}: {} vs {oracle}", scores[id]));
            }
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if scores[id] < lo - 1e-12 || scores[id] > hi + 1e-12 {
                return Err(format!("cell {id} score outside its feature range"));
            }
        }
        Ok(())
    }

    pub fn baseline_water_eligibility(grid: &Grid) -> Result<(), String> {
        let scenario = ScenarioConfig::baseline();
        let scores =
            siting_core::scoring::score_water_agent(grid, &scenario).map_err(|e| e.to_string())?;
        for id in scores.scores.keys() {
            if grid
                .cell(*id)
                .unwrap()
                .available(Resource::Water(WaterSource::Urban))
                <= 0.0
            {
                return Err(format!("cell {id} has no urban water but was scored"));
            }
        }
        Ok(())
    }

    /// Sites every pathway in turn and checks exact capacity accounting, that
    /// relocations walk strictly down the ranking without revisits, that only
    /// the deployed cell changes and by exactly its site impact, and that the
    /// ledger replays to the final state.
    pub fn portfolio_run_accounting(
        grid: &Grid,
        portfolio: &Portfolio,
        scenario: &ScenarioConfig,
    ) -> Result<(), String> {
        let mut g = grid.clone();
        for (step, p) in portfolio.pathways().iter().enumerate() {
            let before: Vec<_> = g.cells().to_vec();
            let (ranking, rec) = site_pathway(p, &mut g, scenario, step as u32, &NoPenalty)
                .map_err(|e| e.to_string())?;
            let id = rec.pathway;
            if rec.deployed_capacity + rec.residual_capacity != rec.requested_capacity {
                return Err(format!("{id}: deployed + residual != requested"));
            }
            if rec.deployed_capacity < 0.0
                || rec.deployed_capacity > rec.requested_capacity
                || rec.trace.is_empty()
            {
                return Err(format!("{id}: deployed capacity out of range"));
            }

            let position = |c: u32| ranking.cell_ids().iter().position(|x| *x == c);
            let mut visited: Vec<usize> = Vec::new();
            for t in &rec.trace {
                if let (Decision::Relocate { .. }, Some(c)) = (&t.decision, t.cell_id) {
                    visited.push(
                        position(c)
                            .ok_or_else(|| format!("{id}: relocated from unranked cell {c}"))?,
                    );
                }
            }
            if let Some(c) = rec.cell_id {
                visited.push(
                    position(c).ok_or_else(|| format!("{id}: deployed at unranked cell {c}"))?,
                );
            }
            if !visited.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!(
                    "{id}: trace {} revisits or climbs the ranking",
                    rec.trace_string()
                ));
            }

            let mut water = 0.0;
            let mut land = 0.0;
            let mut grid_energy = 0.0;
            for e in g.ledger().iter().filter(|e| e.step == step as u32) {
                if e.resource.starts_with("water_") {
                    water += e.delta;
                } else if e.resource.starts_with("land_") {
                    land += e.delta;
                } else if e.resource == "grid_energy" {
                    grid_energy += e.delta;
                }
            }
            let expected_energy = if p.requires_grid_energy {
                rec.site_impact.energy_mwh
            } else {
                0.0
            };
            if rec.deployed_capacity > 0.0 {
                if water != rec.site_impact.water_m3
                    || land != rec.site_impact.land_m2
                    || grid_energy != expected_energy
                {
                    return Err(format!("{id}: ledger debits ({water}, {land}, {grid_energy}) differ from site impact {:?}", rec.site_impact));
                }
            } else if water != 0.0 || land != 0.0 || grid_energy != 0.0 {
                return Err(format!("{id}: rejected pathway left ledger entries"));
            }
            for (now, then) in g.cells().iter().zip(&before) {
                if Some(now.cell_id) != rec.cell_id && now != then {
                    return Err(format!(
                        "{id}: cell {} changed without a deployment",
                        now.cell_id
                    ));
                }
            }
        }
        for (c, a) in g.cells().iter().zip(g.replay()) {
            if c.availability() != &a {
                return Err(format!("ledger replay differs at cell {}", c.cell_id));
            }
        }
        Ok(())
    }
}
