//! Run orchestration: regional screening, the coupled siting loop, and the
//! report files consumed by external plotting.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::decision::{cell_impacts, run_portfolio, DeploymentRecord};
use crate::error::{Result, SitingError};
use crate::grid::{Grid, GridSchema};
use crate::lca::{
    regional_screen, Dimension, FactorTable, FunctionalUnit, ImpactVector, PathwayId, Portfolio,
    RegionalLimits, ScreeningReport,
};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayTotal {
    pub pathway: PathwayId,
    pub unit: FunctionalUnit,
    pub requested: f64,
    pub deployed: f64,
    pub residual: f64,
    pub impact: ImpactVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellImpact {
    pub cell_id: u32,
    pub x_km: f64,
    pub y_km: f64,
    pub impact: ImpactVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub factors_version: String,
    pub scenario: ScenarioConfig,
    pub regional_limits: RegionalLimits,
    pub screening: ScreeningReport,
    pub records: Vec<DeploymentRecord>,
    pub pathway_totals: Vec<PathwayTotal>,
    /// One line per pathway left short, e.g. "8 MW of animal_waste undeployed".
    pub residuals: Vec<String>,
    pub cell_impacts: Vec<CellImpact>,
    pub steps: usize,
    pub ledger_entries: usize,
    pub wall_clock_ms: f64,
}

pub struct SimulationOutcome {
    pub report: RunReport,
    pub grid: Grid,
}

/// Regional availability of a grid under the scenario's water and land rules.
/// Energy and carbon are left unconstrained at the regional level.
pub fn regional_limits(grid: &Grid, scenario: &ScenarioConfig) -> RegionalLimits {
    let water = grid
        .cells()
        .iter()
        .map(|c| c.water_total(&scenario.constraints.allowed_water_sources))
        .sum();
    let land = grid
        .cells()
        .iter()
        .map(|c| c.land_total(&scenario.constraints.allowed_land_types))
        .sum();
    RegionalLimits::default()
        .with(Dimension::Water, water)
        .with(Dimension::Land, land)
}

pub fn residual_statement(total: &PathwayTotal) -> String {
    format!(
        "{} {} of {} undeployed",
        total.residual,
        total.unit.as_str(),
        total.pathway
    )
}

/// Screens the portfolio against the grid, then sites every pathway.
pub fn run_simulation(
    mut grid: Grid,
    portfolio: &Portfolio,
    scenario: &ScenarioConfig,
    factors_version: &str,
) -> Result<SimulationOutcome> {
    let started = Instant::now();
    let limits = regional_limits(&grid, scenario);
    let (screened, screening) = regional_screen(portfolio, &limits, &scenario.lca_options());
    let records = run_portfolio(&screened, &mut grid, scenario)?;

    let pathway_totals: Vec<PathwayTotal> = records
        .iter()
        .map(|r| PathwayTotal {
            pathway: r.pathway,
            unit: r.unit,
            requested: r.requested_capacity,
            deployed: r.deployed_capacity,
            residual: r.residual_capacity,
            impact: r.site_impact,
        })
        .collect();
    let residuals = pathway_totals
        .iter()
        .filter(|t| t.residual > 0.0)
        .map(residual_statement)
        .collect();

    let per_cell = cell_impacts(&records);
    let cell_impacts = grid
        .cells()
        .iter()
        .map(|c| CellImpact {
            cell_id: c.cell_id,
            x_km: c.x_km,
            y_km: c.y_km,
            impact: per_cell.get(&c.cell_id).copied().unwrap_or_default(),
        })
        .collect();

    let report = RunReport {
        factors_version: factors_version.to_string(),
        scenario: scenario.clone(),
        regional_limits: limits,
        screening,
        steps: records.len(),
        ledger_entries: grid.ledger().len(),
        records,
        pathway_totals,
        residuals,
        cell_impacts,
        wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(SimulationOutcome { report, grid })
}

/// Loads inputs, runs, and writes `report.json`, `deployments.csv`,
/// `impacts_grid.csv` and `ledger.csv` into `out_dir`.
pub fn simulate(
    grid_path: &Path,
    portfolio_path: &Path,
    scenario_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunReport> {
    let table = FactorTable::embedded();
    let grid = Grid::load(grid_path, &GridSchema::default())?;
    let portfolio = Portfolio::load(portfolio_path, &table)?;
    let mut scenario = ScenarioConfig::load(scenario_path)?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    let outcome = run_simulation(grid, &portfolio, &scenario, table.version())?;
    write_outputs(&outcome, out_dir)?;
    Ok(outcome.report)
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| SitingError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SitingError::io(dir, e))
}

pub fn write_outputs(outcome: &SimulationOutcome, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let report = &outcome.report;

    let path = out_dir.join("report.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| SitingError::Serialize(e.to_string()))?;
    w.flush().map_err(|e| SitingError::io(&path, e))?;

    write_deployments_csv(&report.records, create(&out_dir.join("deployments.csv"))?)?;
    write_impacts_grid_csv(
        &report.cell_impacts,
        create(&out_dir.join("impacts_grid.csv"))?,
    )?;
    outcome
        .grid
        .write_ledger_csv(create(&out_dir.join("ledger.csv"))?)?;
    Ok(())
}

pub fn write_deployments_csv<W: Write>(records: &[DeploymentRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "step",
        "pathway",
        "cell_id",
        "requested",
        "deployed",
        "water_m3",
        "land_m2",
        "energy_mwh",
        "carbon_t",
        "decision_trace",
    ])?;
    for r in records {
        let i = &r.site_impact;
        wtr.write_record([
            r.step.to_string(),
            r.pathway.to_string(),
            r.cell_id.map(|c| c.to_string()).unwrap_or_default(),
            r.requested_capacity.to_string(),
            r.deployed_capacity.to_string(),
            i.water_m3.to_string(),
            i.land_m2.to_string(),
            i.energy_mwh.to_string(),
            i.carbon_t.to_string(),
            r.trace_string(),
        ])?;
    }
    wtr.flush()
        .map_err(|e| SitingError::io("deployments.csv", e))?;
    Ok(())
}

pub fn write_impacts_grid_csv<W: Write>(cells: &[CellImpact], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "cell_id",
        "x_km",
        "y_km",
        "water_m3",
        "land_m2",
        "energy_mwh",
        "carbon_t",
    ])?;
    for c in cells {
        let i = &c.impact;
        wtr.write_record([
            c.cell_id.to_string(),
            c.x_km.to_string(),
            c.y_km.to_string(),
            i.water_m3.to_string(),
            i.land_m2.to_string(),
            i.energy_mwh.to_string(),
            i.carbon_t.to_string(),
        ])?;
    }
    wtr.flush()
        .map_err(|e| SitingError::io("impacts_grid.csv", e))?;
    Ok(())
}

/// Portfolio-level screening without siting. Writes `screening.csv` (per-pathway
/// inventory at proposed and adjusted capacity), `screening_summary.csv` and
/// `screening.json`.
pub fn screen_only(
    portfolio_path: &Path,
    limits_path: Option<&Path>,
    scenario: &ScenarioConfig,
    out_dir: &Path,
) -> Result<ScreeningReport> {
    let table = FactorTable::embedded();
    let portfolio = Portfolio::load(portfolio_path, &table)?;
    let limits = match limits_path {
        Some(p) => RegionalLimits::load(p)?,
        None => RegionalLimits::default(),
    };
    let (_, report) = regional_screen(&portfolio, &limits, &scenario.lca_options());
    write_screening(&report, out_dir)?;
    Ok(report)
}

pub fn write_screening(report: &ScreeningReport, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let mut wtr = csv::Writer::from_writer(create(&out_dir.join("screening.csv"))?);
    wtr.write_record([
        "pathway",
        "unit",
        "proposed_capacity",
        "adjusted_capacity",
        "water_m3",
        "land_m2",
        "energy_mwh",
        "carbon_t",
        "adjusted_water_m3",
        "adjusted_land_m2",
        "adjusted_energy_mwh",
        "adjusted_carbon_t",
    ])?;
    let adjusted: BTreeMap<PathwayId, _> = report
        .after
        .per_pathway
        .iter()
        .map(|p| (p.pathway, p))
        .collect();
    for p in &report.before.per_pathway {
        let a = adjusted[&p.pathway];
        let mut row = vec![
            p.pathway.to_string(),
            p.unit.as_str().to_string(),
            p.capacity.to_string(),
            a.capacity.to_string(),
        ];
        row.extend(p.impact.components().map(|v| v.to_string()));
        row.extend(a.impact.components().map(|v| v.to_string()));
        wtr.write_record(row)?;
    }
    let mut total = vec![
        "TOTAL".to_string(),
        String::new(),
        String::new(),
        String::new(),
    ];
    total.extend(report.before.total.components().map(|v| v.to_string()));
    total.extend(report.after.total.components().map(|v| v.to_string()));
    wtr.write_record(total)?;
    wtr.flush()
        .map_err(|e| SitingError::io("screening.csv", e))?;

    let mut wtr = csv::Writer::from_writer(create(&out_dir.join("screening_summary.csv"))?);
    wtr.write_record(["dimension", "demand", "limit", "max_fraction", "binding"])?;
    for d in &report.dimensions {
        wtr.write_record([
            d.dimension.column().to_string(),
            d.demand.to_string(),
            d.limit.map(|l| l.to_string()).unwrap_or_default(),
            d.max_fraction.to_string(),
            report.binding.contains(&d.dimension).to_string(),
        ])?;
    }
    wtr.write_record([
        "scale",
        "",
        "",
        &report.scale.to_string(),
        &report.binding_summary(),
    ])?;
    wtr.flush()
        .map_err(|e| SitingError::io("screening_summary.csv", e))?;

    let path = out_dir.join("screening.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| SitingError::Serialize(e.to_string()))?;
    w.flush().map_err(|e| SitingError::io(&path, e))?;
    Ok(())
}
