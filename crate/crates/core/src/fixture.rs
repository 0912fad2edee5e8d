//! Synthetic input sets: a seeded regional grid and two small hand-checkable cases.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SitingError};
use crate::grid::{
    EnergyCategory, Grid, GridCell, LandType, Resource, WaterFeatures, WaterSource, CELL_SIZE_KM,
};
use crate::lca::{FactorTable, PathwayId, PathwaySpec, Portfolio};
use crate::scenario::{AgentWeights, ScenarioConfig};
use crate::scoring::derive_seed;

pub const PRESETS: [&str; 3] = ["socal-like", "aw-shortfall", "shared-cell"];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub grid: Grid,
    pub portfolio: Portfolio,
    pub scenario: ScenarioConfig,
}

impl Fixture {
    pub fn preset(name: &str, seed: u64) -> Result<Fixture> {
        match name {
            "socal-like" => socal_like(10, 10, seed),
            "aw-shortfall" => aw_shortfall(),
            "shared-cell" => shared_cell(),
            other => Err(SitingError::UnknownPreset(other.to_string())),
        }
    }

    /// Writes `grid.csv`, `portfolio.csv` and `scenario.toml`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| SitingError::io(out_dir, e))?;
        let path = out_dir.join("grid.csv");
        self.grid
            .write_csv(fs::File::create(&path).map_err(|e| SitingError::io(&path, e))?)?;
        let path = out_dir.join("portfolio.csv");
        self.portfolio
            .write_csv(fs::File::create(&path).map_err(|e| SitingError::io(&path, e))?)?;
        let path = out_dir.join("scenario.toml");
        fs::write(&path, self.scenario.to_toml_string()?).map_err(|e| SitingError::io(&path, e))?;
        Ok(())
    }
}

fn center(index: usize) -> f64 {
    index as f64 * CELL_SIZE_KM + CELL_SIZE_KM / 2.0
}

fn blank(id: usize, cols: usize) -> GridCell {
    GridCell::new(id as u32, center(id % cols), center(id / cols))
}

const WIND: Resource = Resource::Energy(EnergyCategory::Wind);
const SOLAR: Resource = Resource::Energy(EnergyCategory::Solar);
const GEO: Resource = Resource::Energy(EnergyCategory::Geothermal);
const AGFO: Resource = Resource::Energy(EnergyCategory::AgForestResidue);
const AW: Resource = Resource::Energy(EnergyCategory::AnimalWaste);
const MSW: Resource = Resource::Energy(EnergyCategory::Msw);
const URBAN_WATER: Resource = Resource::Water(WaterSource::Urban);
const OPEN: Resource = Resource::Land(LandType::UrbanOpenSpace);
const BARREN: Resource = Resource::Land(LandType::Barren);

/// Seeded regional grid: a dense urban west, a sunny barren east, a windy
/// central pass, geothermal resources in the southeast and farmland in the north.
pub fn socal_like(cols: usize, rows: usize, seed: u64) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "fixture/socal-like"));
    let burden_names: Vec<String> = (1..=3).map(|i| format!("burden_{i}")).collect();
    let mut cells = Vec::with_capacity(cols * rows);
    for id in 0..cols * rows {
        let (c, r) = (id % cols, id / cols);
        let fc = c as f64 / cols.max(2).saturating_sub(1) as f64;
        let fr = r as f64 / rows.max(2).saturating_sub(1) as f64;
        let urban = fc < 0.35;
        let east = fc > 0.6;
        let north = fr > 0.7;
        let pass = (0.4..=0.65).contains(&fc) && (0.35..=0.65).contains(&fr);
        let geo_zone = fc > 0.7 && fr < 0.3;

        let mut cell = blank(id, cols)
            .with_available(
                WIND,
                if pass {
                    rng.gen_range(200.0..600.0)
                } else {
                    rng.gen_range(0.0..60.0)
                },
            )
            .with_available(
                SOLAR,
                if east {
                    rng.gen_range(300.0..900.0)
                } else {
                    rng.gen_range(20.0..150.0)
                },
            )
            .with_available(
                GEO,
                if geo_zone {
                    rng.gen_range(100.0..700.0)
                } else {
                    0.0
                },
            )
            .with_available(
                AGFO,
                if north {
                    rng.gen_range(20.0..120.0)
                } else {
                    rng.gen_range(0.0..5.0)
                },
            )
            .with_available(AW, if north { rng.gen_range(2.0..15.0) } else { 0.0 })
            .with_available(
                MSW,
                if urban {
                    rng.gen_range(50.0..400.0)
                } else {
                    rng.gen_range(0.0..10.0)
                },
            )
            .with_available(
                URBAN_WATER,
                if urban {
                    rng.gen_range(5e6..5e7)
                } else if east {
                    rng.gen_range(0.0..2e6)
                } else {
                    rng.gen_range(5e5..1e7)
                },
            )
            .with_available(Resource::Water(WaterSource::Rural), rng.gen_range(1e6..2e7))
            .with_available(
                Resource::Water(WaterSource::Transfer),
                rng.gen_range(0.0..5e6),
            )
            .with_available(
                Resource::Water(WaterSource::Recycled),
                rng.gen_range(0.0..2e6),
            )
            .with_available(
                OPEN,
                if urban {
                    rng.gen_range(1e6..1e7)
                } else {
                    rng.gen_range(1e5..2e6)
                },
            )
            .with_available(
                BARREN,
                if east {
                    rng.gen_range(1e7..6e7)
                } else {
                    rng.gen_range(0.0..5e6)
                },
            )
            .with_available(Resource::Land(LandType::Other), rng.gen_range(1e7..8e7))
            .with_available(Resource::GridEnergy, rng.gen_range(1e5..1e7));
        for wf in cell.water_features.iter_mut() {
            *wf = WaterFeatures {
                stress: Some(rng.gen_range(0.0..5.0)),
                quality_risk: Some(rng.gen_range(0.0..1.0)),
                industrial_ratio: Some(rng.gen_range(0.0..1.0)),
                suppliers: Some(rng.gen_range(1.0..20.0f64).round()),
            };
        }
        cell.ecological.biodiversity = rng.gen_range(0.0..1.0);
        cell.ecological.connectivity = rng.gen_range(0.0..1.0);
        cell.ecological.habitat = rng.gen_range(0.0..1.0);
        cell.ecological.climate_resilience = rng.gen_range(0.0..1.0);
        cell.burden = (0..burden_names.len())
            .map(|_| {
                let base = if urban { 60.0 } else { 10.0 };
                (!rng.gen_bool(0.05)).then(|| base + rng.gen_range(0.0..40.0))
            })
            .collect();
        cell.geothermal_candidate = geo_zone;
        cell.dac_candidate = (east || fr < 0.3) && rng.gen_bool(0.3);
        cells.push(cell);
    }
    Ok(Fixture {
        grid: Grid::new(cells, burden_names)?,
        portfolio: Portfolio::proposed_socal(&FactorTable::embedded()),
        scenario: ScenarioConfig {
            seed,
            ..ScenarioConfig::baseline()
        },
    })
}

/// 4x4 grid where every pathway has a roomy dedicated pair of cells except
/// animal waste, whose two feedstock cells hold 60 000 m3 of urban water each.
/// Hydrogen from wind is trimmed to 200 MW so it fits a single 100 km2 cell.
pub fn aw_shortfall() -> Result<Fixture> {
    let roomy = |id: usize| {
        blank(id, 4)
            .with_available(URBAN_WATER, 1e8)
            .with_available(OPEN, 4.5e7)
            .with_available(BARREN, 4.5e7)
            .with_available(Resource::GridEnergy, 1e6)
    };
    let mut cells = Vec::with_capacity(16);
    for id in 0..16 {
        let cell = match id {
            0 | 1 => {
                let mut c = roomy(id)
                    .with_available(GEO, 500.0)
                    .with_available(Resource::GridEnergy, 1e7);
                c.geothermal_candidate = true;
                c
            }
            2 | 3 => roomy(id).with_available(WIND, 400.0),
            4 | 5 => roomy(id).with_available(SOLAR, 600.0),
            6 | 7 => roomy(id).with_available(AGFO, 100.0),
            8 | 9 => roomy(id).with_available(MSW, 600.0),
            10 | 11 => blank(id, 4)
                .with_available(AW, 50.0)
                .with_available(URBAN_WATER, 60_000.0)
                .with_available(BARREN, 20_000.0),
            12 | 13 => {
                let mut c = roomy(id);
                c.dac_candidate = true;
                c
            }
            _ => roomy(id),
        };
        cells.push(cell);
    }
    let table = FactorTable::embedded();
    let pathways = Portfolio::proposed_socal(&table)
        .pathways()
        .iter()
        .map(|p| {
            if p.id == PathwayId::H2Wind {
                p.with_capacity(200.0)
            } else {
                p.clone()
            }
        })
        .collect();
    Ok(Fixture {
        grid: Grid::new(cells, Vec::new())?,
        portfolio: Portfolio::new(pathways)?,
        scenario: ScenarioConfig::baseline(),
    })
}

/// 2x2 grid where geothermal and lithium extraction both rank the same cell
/// first and compete for its urban water.
pub fn shared_cell() -> Result<Fixture> {
    let geo = |id: usize, potential: f64, water: f64| {
        let mut c = blank(id, 2)
            .with_available(GEO, potential)
            .with_available(URBAN_WATER, water)
            .with_available(BARREN, 1e7)
            .with_available(Resource::GridEnergy, 1e7);
        c.geothermal_candidate = true;
        c
    };
    let plain = |id: usize| {
        blank(id, 2)
            .with_available(URBAN_WATER, 1e6)
            .with_available(BARREN, 1e6)
            .with_available(Resource::GridEnergy, 1e6)
    };
    let cells = vec![geo(0, 1000.0, 2e7), geo(1, 100.0, 5e7), plain(2), plain(3)];
    let table = FactorTable::embedded();
    let portfolio = Portfolio::new(vec![
        PathwaySpec::new(PathwayId::Geothermal, 450.0, &table)?,
        PathwaySpec::new(PathwayId::Dle, 125_000.0, &table)?,
    ])?;
    let scenario = ScenarioConfig {
        agent_weights: AgentWeights {
            energy: 0.85,
            water: 0.05,
            land: 0.05,
            community: 0.05,
        },
        ..ScenarioConfig::baseline()
    };
    Ok(Fixture {
        grid: Grid::new(cells, Vec::new())?,
        portfolio,
        scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in PRESETS {
            let f = Fixture::preset(name, 7).unwrap();
            assert!(!f.grid.is_empty());
            f.scenario.validate().unwrap();
        }
        assert!(Fixture::preset("nope", 0).is_err());
    }

    #[test]
    fn socal_like_is_seeded() {
        let a = socal_like(10, 10, 11).unwrap();
        let b = socal_like(10, 10, 11).unwrap();
        let c = socal_like(10, 10, 12).unwrap();
        assert_eq!(a.grid.cells(), b.grid.cells());
        assert_ne!(a.grid.cells(), c.grid.cells());
        assert_eq!(a.grid.len(), 100);
    }
}
