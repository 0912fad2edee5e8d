//! Shared resources pool: the harmonized 10 km grid of energy, water, land
//! and community layers, plus the append-only consumption ledger.
//!
//! Cell ids follow row-major order over (y, x). Every mutation of an
//! availability goes through [`Grid::consume`] and leaves a ledger entry, so
//! replaying the ledger over the ingested snapshot reproduces the current
//! state bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SitingError};

pub const CELL_SIZE_KM: f64 = 10.0;

const LATTICE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyCategory {
    Wind,
    Solar,
    Geothermal,
    AgForestResidue,
    AnimalWaste,
    Msw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaterSource {
    Urban,
    Rural,
    Transfer,
    Recycled,
}

impl WaterSource {
    pub const ALL: [WaterSource; 4] = [
        WaterSource::Urban,
        WaterSource::Rural,
        WaterSource::Transfer,
        WaterSource::Recycled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WaterSource::Urban => "urban",
            WaterSource::Rural => "rural",
            WaterSource::Transfer => "transfer",
            WaterSource::Recycled => "recycled",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandType {
    UrbanOpenSpace,
    Barren,
    Other,
}

impl LandType {
    pub const ALL: [LandType; 3] = [LandType::UrbanOpenSpace, LandType::Barren, LandType::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            LandType::UrbanOpenSpace => "urban_open_space",
            LandType::Barren => "barren",
            LandType::Other => "other",
        }
    }
}

/// A depletable layer of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resource {
    Energy(EnergyCategory),
    Water(WaterSource),
    Land(LandType),
    GridEnergy,
}

pub const RESOURCE_COUNT: usize = 14;

impl Resource {
    pub const ALL: [Resource; RESOURCE_COUNT] = [
        Resource::Energy(EnergyCategory::Wind),
        Resource::Energy(EnergyCategory::Solar),
        Resource::Energy(EnergyCategory::Geothermal),
        Resource::Energy(EnergyCategory::AgForestResidue),
        Resource::Energy(EnergyCategory::AnimalWaste),
        Resource::Energy(EnergyCategory::Msw),
        Resource::Water(WaterSource::Urban),
        Resource::Water(WaterSource::Rural),
        Resource::Water(WaterSource::Transfer),
        Resource::Water(WaterSource::Recycled),
        Resource::Land(LandType::UrbanOpenSpace),
        Resource::Land(LandType::Barren),
        Resource::Land(LandType::Other),
        Resource::GridEnergy,
    ];

    pub fn index(self) -> usize {
        match self {
            Resource::Energy(c) => c as usize,
            Resource::Water(s) => 6 + s as usize,
            Resource::Land(l) => 10 + l as usize,
            Resource::GridEnergy => 13,
        }
    }

    /// Column name in the grid CSV, also used in the ledger export.
    pub fn column(self) -> &'static str {
        match self {
            Resource::Energy(EnergyCategory::Wind) => "energy_wind",
            Resource::Energy(EnergyCategory::Solar) => "energy_solar",
            Resource::Energy(EnergyCategory::Geothermal) => "energy_geothermal",
            Resource::Energy(EnergyCategory::AgForestResidue) => "feed_agfo",
            Resource::Energy(EnergyCategory::AnimalWaste) => "feed_aw",
            Resource::Energy(EnergyCategory::Msw) => "feed_msw",
            Resource::Water(WaterSource::Urban) => "water_urban",
            Resource::Water(WaterSource::Rural) => "water_rural",
            Resource::Water(WaterSource::Transfer) => "water_transfer",
            Resource::Water(WaterSource::Recycled) => "water_recycled",
            Resource::Land(LandType::UrbanOpenSpace) => "land_urban_open",
            Resource::Land(LandType::Barren) => "land_barren",
            Resource::Land(LandType::Other) => "land_other",
            Resource::GridEnergy => "grid_energy",
        }
    }

    pub fn from_column(name: &str) -> Option<Resource> {
        Resource::ALL.into_iter().find(|r| r.column() == name)
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

/// Current amount of every depletable layer in one cell, indexed by [`Resource::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Availability([f64; RESOURCE_COUNT]);

impl Availability {
    pub fn get(&self, resource: Resource) -> f64 {
        self.0[resource.index()]
    }

    fn get_mut(&mut self, resource: Resource) -> &mut f64 {
        &mut self.0[resource.index()]
    }
}

/// Auxiliary indicators for one water source type. `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WaterFeatures {
    pub stress: Option<f64>,
    pub quality_risk: Option<f64>,
    pub industrial_ratio: Option<f64>,
    pub suppliers: Option<f64>,
}

const WATER_FEATURE_SUFFIXES: [&str; 4] = ["stress", "quality", "industrial", "suppliers"];

impl WaterFeatures {
    fn slot(&mut self, suffix: &str) -> &mut Option<f64> {
        match suffix {
            "stress" => &mut self.stress,
            "quality" => &mut self.quality_risk,
            "industrial" => &mut self.industrial_ratio,
            _ => &mut self.suppliers,
        }
    }

    fn value(&self, suffix: &str) -> Option<f64> {
        match suffix {
            "stress" => self.stress,
            "quality" => self.quality_risk,
            "industrial" => self.industrial_ratio,
            _ => self.suppliers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ecological {
    pub biodiversity: f64,
    pub connectivity: f64,
    pub habitat: f64,
    pub climate_resilience: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub cell_id: u32,
    pub x_km: f64,
    pub y_km: f64,
    available: Availability,
    pub water_features: [WaterFeatures; 4],
    pub ecological: Ecological,
    /// Raw community burden indicators, higher means more burdened.
    pub burden: Vec<Option<f64>>,
    pub dac_candidate: bool,
    pub geothermal_candidate: bool,
}

impl GridCell {
    pub fn new(cell_id: u32, x_km: f64, y_km: f64) -> Self {
        GridCell {
            cell_id,
            x_km,
            y_km,
            available: Availability::default(),
            water_features: [WaterFeatures::default(); 4],
            ecological: Ecological::default(),
            burden: Vec::new(),
            dac_candidate: false,
            geothermal_candidate: false,
        }
    }

    pub fn available(&self, resource: Resource) -> f64 {
        self.available.get(resource)
    }

    pub fn availability(&self) -> &Availability {
        &self.available
    }

    /// Sets an availability. Only meant for building a grid before it is frozen by [`Grid::new`].
    pub fn with_available(mut self, resource: Resource, amount: f64) -> Self {
        *self.available.get_mut(resource) = amount;
        self
    }

    pub fn water_features(&self, source: WaterSource) -> &WaterFeatures {
        &self.water_features[source.index()]
    }

    pub fn water_total(&self, sources: &[WaterSource]) -> f64 {
        sources
            .iter()
            .map(|s| self.available(Resource::Water(*s)))
            .sum()
    }

    pub fn land_total(&self, types: &[LandType]) -> f64 {
        types
            .iter()
            .map(|t| self.available(Resource::Land(*t)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: u32,
    pub cell_id: u32,
    pub resource: String,
    /// Amount consumed (positive debits the cell).
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub resource: String,
    pub requested: f64,
    pub available: f64,
}

/// A point observation to be folded into the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub x_km: f64,
    pub y_km: f64,
    pub layer: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AggregationReport {
    pub folded: usize,
    pub out_of_bounds: usize,
}

/// Maps canonical column names to the headers used by a particular file.
#[derive(Debug, Clone, Default)]
pub struct GridSchema {
    aliases: HashMap<String, String>,
}

impl GridSchema {
    pub fn with_alias(mut self, canonical: &str, header: &str) -> Self {
        self.aliases
            .insert(header.to_string(), canonical.to_string());
        self
    }

    fn canonical<'a>(&'a self, header: &'a str) -> &'a str {
        self.aliases
            .get(header)
            .map(String::as_str)
            .unwrap_or(header)
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    cells: Vec<GridCell>,
    index: HashMap<u32, usize>,
    lattice: HashMap<(i64, i64), usize>,
    origin: (f64, f64),
    burden_names: Vec<String>,
    ingested: Vec<Availability>,
    ledger: Vec<LedgerEntry>,
    step: u32,
}

impl Grid {
    /// Freezes a set of cells into a grid, validating ids, layout and value ranges.
    pub fn new(mut cells: Vec<GridCell>, burden_names: Vec<String>) -> Result<Self> {
        cells.sort_by_key(|c| c.cell_id);
        let mut index = HashMap::with_capacity(cells.len());
        for (i, cell) in cells.iter().enumerate() {
            if index.insert(cell.cell_id, i).is_some() {
                return Err(SitingError::DuplicateCell(cell.cell_id));
            }
            validate_cell(cell, burden_names.len())?;
        }

        let origin = cells.iter().fold((f64::INFINITY, f64::INFINITY), |acc, c| {
            (acc.0.min(c.x_km), acc.1.min(c.y_km))
        });
        let origin = if cells.is_empty() {
            (0.0, 0.0)
        } else {
            (origin.0 - CELL_SIZE_KM / 2.0, origin.1 - CELL_SIZE_KM / 2.0)
        };

        let mut lattice = HashMap::with_capacity(cells.len());
        let mut previous: Option<(i64, i64)> = None;
        for (i, cell) in cells.iter().enumerate() {
            let layout_err = || SitingError::Layout {
                cell_id: cell.cell_id,
                x_km: cell.x_km,
                y_km: cell.y_km,
            };
            let col = lattice_coord(cell.x_km - origin.0).ok_or_else(layout_err)?;
            let row = lattice_coord(cell.y_km - origin.1).ok_or_else(layout_err)?;
            // ids must increase with (row, col)
            if previous.is_some_and(|p| (row, col) <= p) {
                return Err(layout_err());
            }
            previous = Some((row, col));
            lattice.insert((col, row), i);
        }

        let ingested = cells.iter().map(|c| c.available).collect();
        Ok(Grid {
            cells,
            index,
            lattice,
            origin,
            burden_names,
            ingested,
            ledger: Vec::new(),
            step: 0,
        })
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_size_km(&self) -> f64 {
        CELL_SIZE_KM
    }

    pub fn burden_names(&self) -> &[String] {
        &self.burden_names
    }

    pub fn cell(&self, cell_id: u32) -> Result<&GridCell> {
        self.index
            .get(&cell_id)
            .map(|&i| &self.cells[i])
            .ok_or(SitingError::UnknownCell(cell_id))
    }

    /// Cell whose 10 km square contains the point, if any.
    pub fn cell_at(&self, x_km: f64, y_km: f64) -> Option<&GridCell> {
        let col = ((x_km - self.origin.0) / CELL_SIZE_KM).floor();
        let row = ((y_km - self.origin.1) / CELL_SIZE_KM).floor();
        if !col.is_finite() || !row.is_finite() {
            return None;
        }
        self.lattice
            .get(&(col as i64, row as i64))
            .map(|&i| &self.cells[i])
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    /// Step index stamped on subsequent ledger entries.
    pub fn begin_step(&mut self, step: u32) {
        self.step = step;
    }

    /// Debits every demand from one cell, or nothing at all if any demand
    /// exceeds what the cell holds.
    pub fn consume(&mut self, cell_id: u32, demands: &[(Resource, f64)]) -> Result<()> {
        let i = *self
            .index
            .get(&cell_id)
            .ok_or(SitingError::UnknownCell(cell_id))?;
        let cell = &self.cells[i];

        let mut totals: BTreeMap<Resource, f64> = BTreeMap::new();
        for &(resource, amount) in demands {
            if !(amount.is_finite() && amount >= 0.0) {
                return Err(SitingError::invalid(
                    resource.column(),
                    format!("demand must be finite and non-negative, got {amount}"),
                ));
            }
            *totals.entry(resource).or_insert(0.0) += amount;
        }

        let shortfalls: Vec<Shortfall> = totals
            .iter()
            .filter(|(r, amount)| **amount > cell.available(**r))
            .map(|(r, amount)| Shortfall {
                resource: r.column().to_string(),
                requested: *amount,
                available: cell.available(*r),
            })
            .collect();
        if !shortfalls.is_empty() {
            return Err(SitingError::Insufficient {
                cell_id,
                shortfalls,
            });
        }

        let cell = &mut self.cells[i];
        for (resource, amount) in totals {
            if amount == 0.0 {
                continue;
            }
            *cell.available.get_mut(resource) -= amount;
            self.ledger.push(LedgerEntry {
                step: self.step,
                cell_id,
                resource: resource.column().to_string(),
                delta: amount,
            });
        }
        Ok(())
    }

    /// Availabilities rebuilt from the ingested snapshot and the ledger.
    pub fn replay(&self) -> Vec<Availability> {
        let mut state = self.ingested.clone();
        for entry in &self.ledger {
            let i = self.index[&entry.cell_id];
            let resource =
                Resource::from_column(&entry.resource).expect("ledger holds resource columns");
            *state[i].get_mut(resource) -= entry.delta;
        }
        state
    }

    pub fn ingested(&self, cell_id: u32) -> Result<&Availability> {
        self.index
            .get(&cell_id)
            .map(|&i| &self.ingested[i])
            .ok_or(SitingError::UnknownCell(cell_id))
    }

    /// Folds point observations into their containing cells. Only valid
    /// before any consumption; the folded values become the ingested snapshot.
    pub fn aggregate_points(
        &mut self,
        points: &[GridPoint],
        mode: AggregationMode,
    ) -> Result<AggregationReport> {
        if !self.ledger.is_empty() {
            return Err(SitingError::AggregationAfterConsumption);
        }
        enum Layer {
            Resource(Resource),
            Burden(usize),
        }
        let resolve = |name: &str| -> Result<Layer> {
            if let Some(r) = Resource::from_column(name) {
                return Ok(Layer::Resource(r));
            }
            self.burden_names
                .iter()
                .position(|b| b == name)
                .map(Layer::Burden)
                .ok_or_else(|| SitingError::UnknownLayer(name.to_string()))
        };

        let mut report = AggregationReport::default();
        // (cell index, layer key) -> (sum, count); layer key is the column name
        let mut folded: BTreeMap<(usize, String), (f64, usize)> = BTreeMap::new();
        for p in points {
            let layer = resolve(&p.layer)?;
            if matches!(layer, Layer::Resource(_)) && (p.value.is_nan() || p.value < 0.0) {
                return Err(SitingError::invalid(
                    p.layer.clone(),
                    format!("point value must be non-negative, got {}", p.value),
                ));
            }
            let Some(cell) = self.cell_at(p.x_km, p.y_km) else {
                report.out_of_bounds += 1;
                continue;
            };
            let i = self.index[&cell.cell_id];
            let slot = folded.entry((i, p.layer.clone())).or_insert((0.0, 0));
            slot.0 += p.value;
            slot.1 += 1;
            report.folded += 1;
        }

        for ((i, name), (sum, count)) in folded {
            let value = match mode {
                AggregationMode::Sum => sum,
                AggregationMode::Mean => sum / count as f64,
            };
            let cell = &mut self.cells[i];
            match resolve(&name)? {
                Layer::Resource(r) => {
                    let slot = cell.available.get_mut(r);
                    match mode {
                        AggregationMode::Sum => *slot += value,
                        AggregationMode::Mean => *slot = value,
                    }
                }
                Layer::Burden(b) => {
                    let slot = &mut cell.burden[b];
                    *slot = match mode {
                        AggregationMode::Sum => Some(slot.unwrap_or(0.0) + value),
                        AggregationMode::Mean => Some(value),
                    };
                }
            }
        }
        self.ingested = self.cells.iter().map(|c| c.available).collect();
        Ok(report)
    }

    pub fn from_csv_reader<R: Read>(reader: R, schema: &GridSchema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| schema.canonical(h).to_string())
            .collect();

        let mut burden_names: Vec<String> = headers
            .iter()
            .filter(|h| is_burden_column(h))
            .cloned()
            .collect();
        burden_names.sort_by_key(|h| burden_order(h));

        let mut columns = Vec::with_capacity(headers.len());
        for h in &headers {
            columns.push(Column::parse(h, &burden_names)?);
        }
        for required in ["cell_id", "x_km", "y_km"] {
            if !headers.iter().any(|h| h == required) {
                return Err(SitingError::MissingColumn(required.to_string()));
            }
        }

        let mut cells = Vec::new();
        for (n, record) in rdr.records().enumerate() {
            let record = record?;
            let row = n + 1;
            let mut cell = GridCell::new(0, 0.0, 0.0);
            cell.burden = vec![None; burden_names.len()];
            for (field, (column, name)) in record.iter().zip(columns.iter().zip(&headers)) {
                let bad = |message: String| SitingError::MalformedRow {
                    row,
                    column: name.clone(),
                    message,
                };
                match column {
                    Column::CellId => {
                        cell.cell_id = field.parse().map_err(|_| {
                            bad(format!("expected non-negative integer, got {field:?}"))
                        })?;
                    }
                    Column::X => cell.x_km = parse_number(field).map_err(bad)?,
                    Column::Y => cell.y_km = parse_number(field).map_err(bad)?,
                    Column::Resource(r) => {
                        let v = parse_number(field).map_err(bad)?;
                        if v < 0.0 {
                            return Err(bad(format!("negative availability {v}")));
                        }
                        *cell.available.get_mut(*r) = v;
                    }
                    Column::WaterFeature(source, suffix) => {
                        *cell.water_features[source.index()].slot(suffix) =
                            parse_optional(field).map_err(bad)?;
                    }
                    Column::Eco(which) => {
                        let v = parse_number(field).map_err(bad)?;
                        if !(0.0..=1.0).contains(&v) {
                            return Err(bad(format!("ecological index {v} outside [0, 1]")));
                        }
                        match *which {
                            0 => cell.ecological.biodiversity = v,
                            1 => cell.ecological.connectivity = v,
                            2 => cell.ecological.habitat = v,
                            _ => cell.ecological.climate_resilience = v,
                        }
                    }
                    Column::Burden(b) => cell.burden[*b] = parse_optional(field).map_err(bad)?,
                    Column::DacCandidate => cell.dac_candidate = parse_bool(field).map_err(bad)?,
                    Column::GeothermalCandidate => {
                        cell.geothermal_candidate = parse_bool(field).map_err(bad)?
                    }
                }
            }
            cells.push(cell);
        }
        Grid::new(cells, burden_names)
    }

    pub fn load(path: impl AsRef<Path>, schema: &GridSchema) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SitingError::io(path, e))?;
        Grid::from_csv_reader(std::io::BufReader::new(file), schema)
    }

    pub fn header(&self) -> Vec<String> {
        let mut header: Vec<String> = ["cell_id", "x_km", "y_km"].map(String::from).to_vec();
        header.extend(Resource::ALL[..13].iter().map(|r| r.column().to_string()));
        for source in WaterSource::ALL {
            for suffix in WATER_FEATURE_SUFFIXES {
                header.push(format!("water_{}_{suffix}", source.as_str()));
            }
        }
        header.extend(
            [
                "eco_biodiversity",
                "eco_connectivity",
                "eco_habitat",
                "eco_resilience",
            ]
            .map(String::from),
        );
        header.extend(self.burden_names.iter().cloned());
        header.extend(["grid_energy", "dac_candidate", "geothermal_candidate"].map(String::from));
        header
    }

    /// Writes the current state in the canonical CSV layout.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.header())?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for cell in &self.cells {
            let mut row = vec![
                cell.cell_id.to_string(),
                cell.x_km.to_string(),
                cell.y_km.to_string(),
            ];
            row.extend(
                Resource::ALL[..13]
                    .iter()
                    .map(|r| cell.available(*r).to_string()),
            );
            for features in &cell.water_features {
                for suffix in WATER_FEATURE_SUFFIXES {
                    row.push(opt(features.value(suffix)));
                }
            }
            let eco = &cell.ecological;
            row.extend(
                [
                    eco.biodiversity,
                    eco.connectivity,
                    eco.habitat,
                    eco.climate_resilience,
                ]
                .map(|v| v.to_string()),
            );
            row.extend(cell.burden.iter().map(|b| opt(*b)));
            row.push(cell.available(Resource::GridEnergy).to_string());
            row.push(cell.dac_candidate.to_string());
            row.push(cell.geothermal_candidate.to_string());
            wtr.write_record(row)?;
        }
        wtr.flush().map_err(|e| SitingError::io("<grid csv>", e))?;
        Ok(())
    }

    pub fn write_ledger_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["step", "cell_id", "resource", "delta"])?;
        for e in &self.ledger {
            wtr.write_record([
                e.step.to_string(),
                e.cell_id.to_string(),
                e.resource.clone(),
                e.delta.to_string(),
            ])?;
        }
        wtr.flush()
            .map_err(|e| SitingError::io("<ledger csv>", e))?;
        Ok(())
    }
}

fn validate_cell(cell: &GridCell, burden_len: usize) -> Result<()> {
    let field = |name: &str| format!("cell {} {name}", cell.cell_id);
    if !cell.x_km.is_finite() || !cell.y_km.is_finite() {
        return Err(SitingError::invalid(field("coordinates"), "must be finite"));
    }
    for r in Resource::ALL {
        let v = cell.available(r);
        if !(v.is_finite() && v >= 0.0) {
            return Err(SitingError::invalid(
                field(r.column()),
                format!("availability must be finite and non-negative, got {v}"),
            ));
        }
    }
    let eco = &cell.ecological;
    for (name, v) in [
        ("eco_biodiversity", eco.biodiversity),
        ("eco_connectivity", eco.connectivity),
        ("eco_habitat", eco.habitat),
        ("eco_resilience", eco.climate_resilience),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(SitingError::invalid(
                field(name),
                format!("{v} outside [0, 1]"),
            ));
        }
    }
    if cell.burden.len() != burden_len {
        return Err(SitingError::invalid(
            field("burden"),
            format!(
                "expected {burden_len} indicators, got {}",
                cell.burden.len()
            ),
        ));
    }
    Ok(())
}

fn lattice_coord(offset: f64) -> Option<i64> {
    let steps = (offset - CELL_SIZE_KM / 2.0) / CELL_SIZE_KM;
    let rounded = steps.round();
    ((steps - rounded).abs() < LATTICE_EPS && rounded >= 0.0).then_some(rounded as i64)
}

enum Column {
    CellId,
    X,
    Y,
    Resource(Resource),
    WaterFeature(WaterSource, &'static str),
    Eco(u8),
    Burden(usize),
    DacCandidate,
    GeothermalCandidate,
}

impl Column {
    fn parse(name: &str, burden_names: &[String]) -> Result<Column> {
        let column = match name {
            "cell_id" => Column::CellId,
            "x_km" => Column::X,
            "y_km" => Column::Y,
            "eco_biodiversity" => Column::Eco(0),
            "eco_connectivity" => Column::Eco(1),
            "eco_habitat" => Column::Eco(2),
            "eco_resilience" => Column::Eco(3),
            "dac_candidate" => Column::DacCandidate,
            "geothermal_candidate" => Column::GeothermalCandidate,
            _ => {
                if let Some(r) = Resource::from_column(name) {
                    Column::Resource(r)
                } else if let Some(b) = burden_names.iter().position(|b| b == name) {
                    Column::Burden(b)
                } else if let Some(wf) = water_feature_column(name) {
                    wf
                } else {
                    return Err(SitingError::UnknownColumn(name.to_string()));
                }
            }
        };
        Ok(column)
    }
}

fn water_feature_column(name: &str) -> Option<Column> {
    let rest = name.strip_prefix("water_")?;
    WaterSource::ALL.into_iter().find_map(|source| {
        let suffix = rest.strip_prefix(source.as_str())?.strip_prefix('_')?;
        WATER_FEATURE_SUFFIXES
            .into_iter()
            .find(|s| *s == suffix)
            .map(|s| Column::WaterFeature(source, s))
    })
}

fn is_burden_column(name: &str) -> bool {
    name.strip_prefix("burden_")
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn burden_order(name: &str) -> u64 {
    name["burden_".len()..].parse().unwrap_or(u64::MAX)
}

fn parse_number(field: &str) -> std::result::Result<f64, String> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {field:?}")),
    }
}

fn parse_optional(field: &str) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() || field.eq_ignore_ascii_case("na") {
        Ok(None)
    } else {
        parse_number(field).map(Some)
    }
}

fn parse_bool(field: &str) -> std::result::Result<bool, String> {
    match field.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        _ => Err(format!("expected a boolean, got {field:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_10x10() -> String {
        let mut s = String::from("cell_id,x_km,y_km,water_urban,land_barren\n");
        for row in 0..10 {
            for col in 0..10 {
                let id = row * 10 + col;
                s.push_str(&format!("{id},{},{},100,50\n", col * 10 + 5, row * 10 + 5));
            }
        }
        s
    }

    fn small_grid() -> Grid {
        let csv = "cell_id,x_km,y_km,water_urban,land_barren,burden_1\n\
                   0,5,5,100,50,0.2\n1,15,5,10,0,0.4\n2,5,15,0,0,\n3,15,15,7,7,0.9\n";
        Grid::from_csv_reader(csv.as_bytes(), &GridSchema::default()).unwrap()
    }

    #[test]
    fn loads_four_rows() {
        let grid = small_grid();
        assert_eq!(grid.len(), 4);
        assert_eq!(grid.cell_size_km(), 10.0);
        assert_eq!(grid.burden_names(), ["burden_1".to_string()]);
        assert_eq!(grid.cell(2).unwrap().burden, vec![None]);
        assert_eq!(
            grid.cell(0)
                .unwrap()
                .available(Resource::Water(WaterSource::Rural)),
            0.0
        );
    }

    #[test]
    fn row_major_ids() {
        let grid = Grid::from_csv_reader(csv_10x10().as_bytes(), &GridSchema::default()).unwrap();
        assert_eq!(grid.cell_at(55.0, 55.0).unwrap().cell_id, 55);
        assert_eq!(grid.cell_at(0.0, 0.0).unwrap().cell_id, 0);
        assert_eq!(grid.cell_at(99.9, 0.1).unwrap().cell_id, 9);
        assert!(grid.cell_at(100.0, 5.0).is_none());
        assert!(grid.cell_at(-0.1, 5.0).is_none());
    }

    #[test]
    fn rejects_negative_availability_naming_row() {
        let csv = "cell_id,x_km,y_km,water_urban\n0,5,5,1\n1,15,5,-5\n";
        let err = Grid::from_csv_reader(csv.as_bytes(), &GridSchema::default()).unwrap_err();
        match err {
            SitingError::MalformedRow { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "water_urban");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_bad_numbers_and_unknown_columns() {
        let dup = "cell_id,x_km,y_km\n0,5,5\n0,15,5\n";
        assert!(matches!(
            Grid::from_csv_reader(dup.as_bytes(), &GridSchema::default()),
            Err(SitingError::DuplicateCell(0))
        ));
        let bad = "cell_id,x_km,y_km,land_barren\n0,5,5,abc\n";
        assert!(matches!(
            Grid::from_csv_reader(bad.as_bytes(), &GridSchema::default()),
            Err(SitingError::MalformedRow { row: 1, .. })
        ));
        let unknown = "cell_id,x_km,y_km,water_urbn\n0,5,5,1\n";
        assert!(matches!(
            Grid::from_csv_reader(unknown.as_bytes(), &GridSchema::default()),
            Err(SitingError::UnknownColumn(_))
        ));
        let eco = "cell_id,x_km,y_km,eco_habitat\n0,5,5,1.5\n";
        assert!(Grid::from_csv_reader(eco.as_bytes(), &GridSchema::default()).is_err());
    }

    #[test]
    fn rejects_ids_out_of_row_major_order() {
        let csv = "cell_id,x_km,y_km\n0,15,5\n1,5,5\n";
        assert!(matches!(
            Grid::from_csv_reader(csv.as_bytes(), &GridSchema::default()),
            Err(SitingError::Layout { .. })
        ));
        let off_lattice = "cell_id,x_km,y_km\n0,5,5\n1,17,5\n";
        assert!(Grid::from_csv_reader(off_lattice.as_bytes(), &GridSchema::default()).is_err());
    }

    #[test]
    fn schema_aliases() {
        let csv = "id,x,y,urban_water\n0,5,5,3\n";
        let schema = GridSchema::default()
            .with_alias("cell_id", "id")
            .with_alias("x_km", "x")
            .with_alias("y_km", "y")
            .with_alias("water_urban", "urban_water");
        let grid = Grid::from_csv_reader(csv.as_bytes(), &schema).unwrap();
        assert_eq!(
            grid.cell(0)
                .unwrap()
                .available(Resource::Water(WaterSource::Urban)),
            3.0
        );
    }

    #[test]
    fn consume_zero_is_noop() {
        let mut grid = small_grid();
        let before = grid.cells().to_vec();
        grid.consume(0, &[(Resource::Water(WaterSource::Urban), 0.0)])
            .unwrap();
        assert_eq!(grid.cells(), &before[..]);
        assert!(grid.ledger().is_empty());
    }

    #[test]
    fn consume_debits_and_logs() {
        let mut grid = small_grid();
        grid.begin_step(3);
        grid.consume(0, &[(Resource::Water(WaterSource::Urban), 40.0)])
            .unwrap();
        assert_eq!(
            grid.cell(0)
                .unwrap()
                .available(Resource::Water(WaterSource::Urban)),
            60.0
        );
        assert_eq!(
            grid.ledger(),
            &[LedgerEntry {
                step: 3,
                cell_id: 0,
                resource: "water_urban".into(),
                delta: 40.0
            }]
        );
        assert_eq!(
            grid.cell(1)
                .unwrap()
                .available(Resource::Water(WaterSource::Urban)),
            10.0
        );
    }

    #[test]
    fn consume_is_atomic() {
        let mut grid = small_grid();
        let before = grid.cells().to_vec();
        let err = grid
            .consume(
                0,
                &[
                    (Resource::Water(WaterSource::Urban), 40.0),
                    (Resource::Land(LandType::Barren), 80.0),
                ],
            )
            .unwrap_err();
        match err {
            SitingError::Insufficient {
                cell_id,
                shortfalls,
            } => {
                assert_eq!(cell_id, 0);
                assert_eq!(shortfalls.len(), 1);
                assert_eq!(shortfalls[0].resource, "land_barren");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(grid.cells(), &before[..]);
        assert!(grid.ledger().is_empty());
        assert_eq!(grid.replay()[0], *grid.cell(0).unwrap().availability());
    }

    #[test]
    fn consume_lists_every_shortfall() {
        let mut grid = small_grid();
        let err = grid
            .consume(
                3,
                &[
                    (Resource::Water(WaterSource::Urban), 8.0),
                    (Resource::Land(LandType::Barren), 8.0),
                ],
            )
            .unwrap_err();
        let SitingError::Insufficient { shortfalls, .. } = err else {
            panic!()
        };
        assert_eq!(shortfalls.len(), 2);
    }

    #[test]
    fn aggregation_sum_and_mean() {
        let mut grid = small_grid();
        let pt = |x, y, v| GridPoint {
            x_km: x,
            y_km: y,
            layer: "feed_aw".into(),
            value: v,
        };
        let report = grid
            .aggregate_points(
                &[pt(12.0, 12.0, 7.0), pt(500.0, 0.0, 1.0)],
                AggregationMode::Sum,
            )
            .unwrap();
        assert_eq!(
            report,
            AggregationReport {
                folded: 1,
                out_of_bounds: 1
            }
        );
        let aw = Resource::Energy(EnergyCategory::AnimalWaste);
        assert_eq!(grid.cell(3).unwrap().available(aw), 7.0);

        grid.aggregate_points(
            &[pt(1.0, 1.0, 4.0), pt(9.0, 9.0, 6.0)],
            AggregationMode::Mean,
        )
        .unwrap();
        assert_eq!(grid.cell(0).unwrap().available(aw), 5.0);
        assert_eq!(grid.ingested(0).unwrap().get(aw), 5.0);

        let err = grid.aggregate_points(
            &[GridPoint {
                x_km: 1.0,
                y_km: 1.0,
                layer: "nope".into(),
                value: 1.0,
            }],
            AggregationMode::Sum,
        );
        assert!(matches!(err, Err(SitingError::UnknownLayer(_))));
    }

    #[test]
    fn csv_write_roundtrip() {
        let grid = small_grid();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let again = Grid::from_csv_reader(buf.as_slice(), &GridSchema::default()).unwrap();
        assert_eq!(again.cells(), grid.cells());
    }
}
