//! Production-stage life cycle inventory: converts a pathway at a capacity
//! into annual water, land, energy and carbon demands, screens a whole
//! portfolio against regional availability, and answers site-level queries
//! from the decision loop.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SitingError};
use crate::grid::{EnergyCategory, Resource};

pub const EMBEDDED_FACTORS: &str = include_str!("../data/conversion_factors.csv");
pub const EMBEDDED_PORTFOLIO: &str = include_str!("../data/portfolio_socal.csv");

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Relative slack used when comparing portfolio demand against regional limits.
pub const SCREEN_RTOL: f64 = 1e-9;

/// Site impacts entering the grid and the reports are rounded to multiples of
/// this power of two, so that sums over deployments are exact in any order
/// while totals stay below 2^36.
pub const ACCOUNTING_RESOLUTION: f64 = 1.0 / 65536.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathwayId {
    Geothermal,
    AgfoResidue,
    AnimalWaste,
    MswDc,
    MswAd,
    MswLfg,
    H2Wind,
    H2Solar,
    Dle,
    Dac,
}

impl PathwayId {
    pub const ALL: [PathwayId; 10] = [
        PathwayId::Geothermal,
        PathwayId::AgfoResidue,
        PathwayId::AnimalWaste,
        PathwayId::MswDc,
        PathwayId::MswAd,
        PathwayId::MswLfg,
        PathwayId::H2Wind,
        PathwayId::H2Solar,
        PathwayId::Dle,
        PathwayId::Dac,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PathwayId::Geothermal => "geothermal",
            PathwayId::AgfoResidue => "agfo_residue",
            PathwayId::AnimalWaste => "animal_waste",
            PathwayId::MswDc => "msw_dc",
            PathwayId::MswAd => "msw_ad",
            PathwayId::MswLfg => "msw_lfg",
            PathwayId::H2Wind => "h2_wind",
            PathwayId::H2Solar => "h2_solar",
            PathwayId::Dle => "dle",
            PathwayId::Dac => "dac",
        }
    }

    pub fn functional_unit(self) -> FunctionalUnit {
        match self {
            PathwayId::Dle | PathwayId::Dac => FunctionalUnit::TonnePerYr,
            _ => FunctionalUnit::Mw,
        }
    }

    /// Waste-to-energy pathways, which may carry post-combustion capture.
    pub fn is_wte(self) -> bool {
        matches!(
            self,
            PathwayId::AgfoResidue
                | PathwayId::AnimalWaste
                | PathwayId::MswDc
                | PathwayId::MswAd
                | PathwayId::MswLfg
        )
    }

    pub fn is_hydrogen(self) -> bool {
        matches!(self, PathwayId::H2Wind | PathwayId::H2Solar)
    }

    pub fn requires_grid_energy(self) -> bool {
        matches!(self, PathwayId::Dle | PathwayId::Dac)
    }

    pub fn siting_mask(self) -> Option<SitingMask> {
        match self {
            PathwayId::Dac => Some(SitingMask::DacCandidate),
            PathwayId::Geothermal => Some(SitingMask::GeothermalCandidate),
            _ => None,
        }
    }

    /// Grid layer whose positive potential makes a cell a candidate.
    /// Lithium comes from geothermal brine; air capture draws on grid electricity.
    pub fn energy_resource(self) -> Resource {
        match self {
            PathwayId::Geothermal | PathwayId::Dle => Resource::Energy(EnergyCategory::Geothermal),
            PathwayId::AgfoResidue => Resource::Energy(EnergyCategory::AgForestResidue),
            PathwayId::AnimalWaste => Resource::Energy(EnergyCategory::AnimalWaste),
            PathwayId::MswDc | PathwayId::MswAd | PathwayId::MswLfg => {
                Resource::Energy(EnergyCategory::Msw)
            }
            PathwayId::H2Wind => Resource::Energy(EnergyCategory::Wind),
            PathwayId::H2Solar => Resource::Energy(EnergyCategory::Solar),
            PathwayId::Dac => Resource::GridEnergy,
        }
    }
}

impl fmt::Display for PathwayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PathwayId {
    type Err = SitingError;

    fn from_str(s: &str) -> Result<Self> {
        PathwayId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SitingError::UnknownPathway(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalUnit {
    #[serde(rename = "MW")]
    Mw,
    #[serde(rename = "tonne")]
    TonnePerYr,
}

impl FunctionalUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            FunctionalUnit::Mw => "MW",
            FunctionalUnit::TonnePerYr => "tonne",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SitingMask {
    DacCandidate,
    GeothermalCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorBasis {
    PerMw,
    PerTonne,
    PerSite,
}

/// Per-functional-unit inventory factors for one pathway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionFactors {
    /// m3 per MW or per tonne of annual product.
    pub water: f64,
    pub water_basis: FactorBasis,
    /// m2 per MW, per tonne or per site.
    pub land: f64,
    pub land_basis: FactorBasis,
    /// MWh per tonne of annual product.
    pub energy: f64,
    /// tonne per MW.
    pub carbon: f64,
    /// MWh of electricity per tonne of product; bridges MW to tonnes for hydrogen.
    pub h2_specific_energy: Option<f64>,
}

/// Factors of post-combustion capture, applied per tonne of carbon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureFactors {
    pub water: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorTable {
    pathways: BTreeMap<PathwayId, ConversionFactors>,
    capture: CaptureFactors,
    version: String,
}

#[derive(Debug, Deserialize)]
struct FactorRow {
    pathway: String,
    water_factor: f64,
    water_unit: String,
    land_factor: f64,
    land_basis: String,
    energy_factor: f64,
    carbon_factor: f64,
    #[serde(default)]
    specific_energy: Option<f64>,
}

impl FactorTable {
    pub fn embedded() -> Self {
        FactorTable::from_csv_str(EMBEDDED_FACTORS).expect("shipped factor table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SitingError::io(path, e))?;
        FactorTable::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut pathways = BTreeMap::new();
        let mut capture = None;
        for (n, row) in rdr.deserialize::<FactorRow>().enumerate() {
            let row = row?;
            let bad = |column: &str, message: String| SitingError::MalformedRow {
                row: n + 1,
                column: column.to_string(),
                message,
            };
            for (column, v) in [
                ("water_factor", row.water_factor),
                ("land_factor", row.land_factor),
                ("energy_factor", row.energy_factor),
                ("carbon_factor", row.carbon_factor),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(bad(column, format!("factor must be non-negative, got {v}")));
                }
            }
            let water_basis = match row.water_unit.as_str() {
                "m3/MW" => FactorBasis::PerMw,
                "m3/tonne" => FactorBasis::PerTonne,
                other => return Err(bad("water_unit", format!("unknown unit {other:?}"))),
            };
            let land_basis = match row.land_basis.as_str() {
                "per_mw" => FactorBasis::PerMw,
                "per_tonne" => FactorBasis::PerTonne,
                "per_site" => FactorBasis::PerSite,
                other => return Err(bad("land_basis", format!("unknown basis {other:?}"))),
            };
            if row.pathway == "post_combustion_capture" {
                capture = Some(CaptureFactors {
                    water: row.water_factor,
                    energy: row.energy_factor,
                });
                continue;
            }
            let id: PathwayId = row.pathway.parse()?;
            if land_basis == FactorBasis::PerSite && !id.is_wte() {
                return Err(bad(
                    "land_basis",
                    format!("per_site land is only valid for WtE, not {id}"),
                ));
            }
            let unit_ok = |basis| match (id.functional_unit(), basis) {
                (FunctionalUnit::TonnePerYr, FactorBasis::PerMw) => false,
                (FunctionalUnit::Mw, FactorBasis::PerTonne) => id.is_hydrogen(),
                _ => true,
            };
            if !unit_ok(water_basis) || !unit_ok(land_basis) {
                return Err(bad("water_unit", format!("factor units do not fit {id}")));
            }
            let h2_specific_energy = match (id.is_hydrogen(), row.specific_energy) {
                (true, Some(v)) if v.is_finite() && v > 0.0 => Some(v),
                (true, _) => {
                    return Err(bad(
                        "specific_energy",
                        format!("{id} needs a positive specific energy"),
                    ))
                }
                (false, None) => None,
                (false, Some(_)) => {
                    return Err(bad(
                        "specific_energy",
                        format!("specific energy only applies to hydrogen, not {id}"),
                    ))
                }
            };
            let factors = ConversionFactors {
                water: row.water_factor,
                water_basis,
                land: row.land_factor,
                land_basis,
                energy: row.energy_factor,
                carbon: row.carbon_factor,
                h2_specific_energy,
            };
            if pathways.insert(id, factors).is_some() {
                return Err(SitingError::DuplicatePathway(id.to_string()));
            }
        }
        let capture = capture
            .ok_or_else(|| SitingError::MissingColumn("post_combustion_capture row".to_string()))?;
        let digest = Sha256::digest(text.as_bytes());
        let version = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        Ok(FactorTable {
            pathways,
            capture,
            version,
        })
    }

    pub fn factors(&self, id: PathwayId) -> Result<ConversionFactors> {
        self.pathways
            .get(&id)
            .copied()
            .ok_or_else(|| SitingError::UnknownPathway(id.to_string()))
    }

    pub fn capture(&self) -> CaptureFactors {
        self.capture
    }

    /// Short content hash of the factor file.
    pub fn version(&self) -> &str {
        &self.version
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySpec {
    pub id: PathwayId,
    pub functional_unit: FunctionalUnit,
    pub proposed_capacity: f64,
    pub factors: ConversionFactors,
    pub capture: CaptureFactors,
    pub requires_grid_energy: bool,
    pub siting_mask: Option<SitingMask>,
}

impl PathwaySpec {
    pub fn new(id: PathwayId, proposed_capacity: f64, table: &FactorTable) -> Result<Self> {
        if !(proposed_capacity.is_finite() && proposed_capacity >= 0.0) {
            return Err(SitingError::invalid(
                format!("{id} capacity"),
                format!("must be finite and non-negative, got {proposed_capacity}"),
            ));
        }
        Ok(PathwaySpec {
            id,
            functional_unit: id.functional_unit(),
            proposed_capacity,
            factors: table.factors(id)?,
            capture: table.capture(),
            requires_grid_energy: id.requires_grid_energy(),
            siting_mask: id.siting_mask(),
        })
    }

    pub fn with_capacity(&self, capacity: f64) -> Self {
        PathwaySpec {
            proposed_capacity: capacity,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pathways: Vec<PathwaySpec>,
}

#[derive(Debug, Deserialize)]
struct PortfolioRow {
    pathway: String,
    capacity: f64,
    unit: String,
}

impl Portfolio {
    pub fn new(pathways: Vec<PathwaySpec>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &pathways {
            if !seen.insert(p.id) {
                return Err(SitingError::DuplicatePathway(p.id.to_string()));
            }
        }
        Ok(Portfolio { pathways })
    }

    pub fn empty() -> Self {
        Portfolio {
            pathways: Vec::new(),
        }
    }

    /// The shipped Southern California proposal.
    pub fn proposed_socal(table: &FactorTable) -> Self {
        Portfolio::from_csv_reader(EMBEDDED_PORTFOLIO.as_bytes(), table)
            .expect("shipped portfolio is valid")
    }

    pub fn from_csv_reader<R: Read>(reader: R, table: &FactorTable) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut pathways = Vec::new();
        for (n, row) in rdr.deserialize::<PortfolioRow>().enumerate() {
            let row = row?;
            let id: PathwayId = row.pathway.parse()?;
            if row.unit != id.functional_unit().as_str() {
                return Err(SitingError::MalformedRow {
                    row: n + 1,
                    column: "unit".into(),
                    message: format!(
                        "{id} is measured in {}, got {:?}",
                        id.functional_unit().as_str(),
                        row.unit
                    ),
                });
            }
            pathways.push(PathwaySpec::new(id, row.capacity, table)?);
        }
        Portfolio::new(pathways)
    }

    pub fn load(path: impl AsRef<Path>, table: &FactorTable) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SitingError::io(path, e))?;
        Portfolio::from_csv_reader(std::io::BufReader::new(file), table)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["pathway", "capacity", "unit"])?;
        for p in &self.pathways {
            wtr.write_record([
                p.id.as_str(),
                &p.proposed_capacity.to_string(),
                p.functional_unit.as_str(),
            ])?;
        }
        wtr.flush()
            .map_err(|e| SitingError::io("<portfolio csv>", e))?;
        Ok(())
    }

    pub fn pathways(&self) -> &[PathwaySpec] {
        &self.pathways
    }

    pub fn get(&self, id: PathwayId) -> Option<&PathwaySpec> {
        self.pathways.iter().find(|p| p.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.pathways.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pathways.len()
    }

    /// Same pathways in the given order. Every id must appear exactly once.
    pub fn reordered(&self, order: &[PathwayId]) -> Result<Self> {
        if order.len() != self.pathways.len() {
            return Err(SitingError::invalid(
                "pathway_order",
                format!(
                    "lists {} pathways, portfolio has {}",
                    order.len(),
                    self.pathways.len()
                ),
            ));
        }
        let pathways = order
            .iter()
            .map(|id| {
                self.get(*id).cloned().ok_or_else(|| {
                    SitingError::invalid("pathway_order", format!("{id} is not in the portfolio"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Portfolio::new(pathways)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Portfolio {
            pathways: self
                .pathways
                .iter()
                .map(|p| p.with_capacity(p.proposed_capacity * factor))
                .collect(),
        }
    }
}

/// Annual water (m3), land (m2), energy (MWh) and carbon (tonne) demand.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImpactVector {
    pub water_m3: f64,
    pub land_m2: f64,
    pub energy_mwh: f64,
    pub carbon_t: f64,
}

impl ImpactVector {
    pub const ZERO: ImpactVector = ImpactVector {
        water_m3: 0.0,
        land_m2: 0.0,
        energy_mwh: 0.0,
        carbon_t: 0.0,
    };

    pub fn get(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Water => self.water_m3,
            Dimension::Land => self.land_m2,
            Dimension::Energy => self.energy_mwh,
            Dimension::Carbon => self.carbon_t,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.water_m3, self.land_m2, self.energy_mwh, self.carbon_t]
    }

    /// Rounded to [`ACCOUNTING_RESOLUTION`] for exact aggregation.
    pub fn for_accounting(&self) -> ImpactVector {
        let q = |v: f64| (v / ACCOUNTING_RESOLUTION).round() * ACCOUNTING_RESOLUTION;
        ImpactVector {
            water_m3: q(self.water_m3),
            land_m2: q(self.land_m2),
            energy_mwh: q(self.energy_mwh),
            carbon_t: q(self.carbon_t),
        }
    }
}

impl Add for ImpactVector {
    type Output = ImpactVector;

    fn add(self, rhs: ImpactVector) -> ImpactVector {
        ImpactVector {
            water_m3: self.water_m3 + rhs.water_m3,
            land_m2: self.land_m2 + rhs.land_m2,
            energy_mwh: self.energy_mwh + rhs.energy_mwh,
            carbon_t: self.carbon_t + rhs.carbon_t,
        }
    }
}

impl AddAssign for ImpactVector {
    fn add_assign(&mut self, rhs: ImpactVector) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ImpactVector {
    fn sum<I: Iterator<Item = ImpactVector>>(iter: I) -> ImpactVector {
        iter.fold(ImpactVector::ZERO, Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Water,
    Land,
    Energy,
    Carbon,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Water,
        Dimension::Land,
        Dimension::Energy,
        Dimension::Carbon,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Dimension::Water => "water_m3",
            Dimension::Land => "land_m2",
            Dimension::Energy => "energy_mwh",
            Dimension::Carbon => "carbon_t",
        }
    }
}

/// Scenario switches that change how inventory is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcaOptions {
    /// Capacity factor used to turn hydrogen MW into tonnes per year.
    pub capacity_factor: f64,
    /// Compose WtE pathways with post-combustion capture.
    pub capture_composition: bool,
}

impl Default for LcaOptions {
    fn default() -> Self {
        LcaOptions {
            capacity_factor: 0.35,
            capture_composition: true,
        }
    }
}

/// Annual product of a pathway at a capacity: tonnes/yr for tonne-denominated
/// and hydrogen pathways, MW for the rest.
pub fn annual_throughput(pathway: &PathwaySpec, capacity: f64, options: &LcaOptions) -> f64 {
    if let Some(specific) = pathway.factors.h2_specific_energy {
        capacity * HOURS_PER_YEAR * options.capacity_factor / specific
    } else {
        capacity
    }
}

fn basis_amount(basis: FactorBasis, capacity: f64, throughput: f64) -> f64 {
    match basis {
        FactorBasis::PerMw => capacity,
        FactorBasis::PerTonne => throughput,
        FactorBasis::PerSite => {
            if capacity > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

pub fn pathway_impact(pathway: &PathwaySpec, capacity: f64, options: &LcaOptions) -> ImpactVector {
    let f = &pathway.factors;
    let throughput = annual_throughput(pathway, capacity, options);
    let carbon_t = match pathway.functional_unit {
        FunctionalUnit::Mw => f.carbon * capacity,
        FunctionalUnit::TonnePerYr => 0.0,
    };
    let mut impact = ImpactVector {
        water_m3: f.water * basis_amount(f.water_basis, capacity, throughput),
        land_m2: f.land * basis_amount(f.land_basis, capacity, throughput),
        energy_mwh: f.energy * throughput,
        carbon_t,
    };
    if options.capture_composition && pathway.id.is_wte() {
        impact.water_m3 += pathway.capture.water * carbon_t;
        impact.energy_mwh += pathway.capture.energy * carbon_t;
    }
    impact
}

/// Part of [`pathway_impact`] that does not scale with capacity (per-site land).
pub fn fixed_impact(pathway: &PathwaySpec, capacity: f64) -> ImpactVector {
    let mut fixed = ImpactVector::ZERO;
    if capacity > 0.0 && pathway.factors.land_basis == FactorBasis::PerSite {
        fixed.land_m2 = pathway.factors.land;
    }
    fixed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayImpact {
    pub pathway: PathwayId,
    pub capacity: f64,
    pub unit: FunctionalUnit,
    pub impact: ImpactVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioImpacts {
    pub per_pathway: Vec<PathwayImpact>,
    pub total: ImpactVector,
}

impl PortfolioImpacts {
    pub fn get(&self, id: PathwayId) -> Option<&ImpactVector> {
        self.per_pathway
            .iter()
            .find(|p| p.pathway == id)
            .map(|p| &p.impact)
    }
}

pub fn portfolio_impacts(portfolio: &Portfolio, options: &LcaOptions) -> PortfolioImpacts {
    let per_pathway: Vec<PathwayImpact> = portfolio
        .pathways()
        .iter()
        .map(|p| PathwayImpact {
            pathway: p.id,
            capacity: p.proposed_capacity,
            unit: p.functional_unit,
            impact: pathway_impact(p, p.proposed_capacity, options),
        })
        .collect();
    let total = per_pathway.iter().map(|p| p.impact).sum();
    PortfolioImpacts { per_pathway, total }
}

/// Regional availability per dimension; `None` means unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegionalLimits {
    pub water_m3: Option<f64>,
    pub land_m2: Option<f64>,
    pub energy_mwh: Option<f64>,
    pub carbon_t: Option<f64>,
}

impl RegionalLimits {
    pub fn get(&self, dimension: Dimension) -> Option<f64> {
        match dimension {
            Dimension::Water => self.water_m3,
            Dimension::Land => self.land_m2,
            Dimension::Energy => self.energy_mwh,
            Dimension::Carbon => self.carbon_t,
        }
    }

    fn slot(&mut self, dimension: Dimension) -> &mut Option<f64> {
        match dimension {
            Dimension::Water => &mut self.water_m3,
            Dimension::Land => &mut self.land_m2,
            Dimension::Energy => &mut self.energy_mwh,
            Dimension::Carbon => &mut self.carbon_t,
        }
    }

    pub fn with(mut self, dimension: Dimension, limit: f64) -> Self {
        *self.slot(dimension) = Some(limit);
        self
    }

    /// Reads `dimension,limit` rows, dimension being one of water_m3, land_m2,
    /// energy_mwh, carbon_t.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            dimension: String,
            limit: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut limits = RegionalLimits::default();
        for (n, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row?;
            let dimension = Dimension::ALL
                .into_iter()
                .find(|d| d.column() == row.dimension)
                .ok_or_else(|| SitingError::MalformedRow {
                    row: n + 1,
                    column: "dimension".into(),
                    message: format!("unknown dimension {:?}", row.dimension),
                })?;
            if row.limit.is_nan() || row.limit < 0.0 {
                return Err(SitingError::MalformedRow {
                    row: n + 1,
                    column: "limit".into(),
                    message: format!("limit must be non-negative, got {}", row.limit),
                });
            }
            *limits.slot(dimension) = Some(row.limit);
        }
        Ok(limits)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SitingError::io(path, e))?;
        RegionalLimits::from_csv_reader(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCheck {
    pub dimension: Dimension,
    pub demand: f64,
    pub limit: Option<f64>,
    /// Largest portfolio-wide scale at which this dimension fits.
    pub max_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub scale: f64,
    pub binding: Vec<Dimension>,
    pub dimensions: Vec<DimensionCheck>,
    pub before: PortfolioImpacts,
    pub after: PortfolioImpacts,
}

impl ScreeningReport {
    pub fn binding_summary(&self) -> String {
        if self.binding.is_empty() {
            "no binding dimension".to_string()
        } else {
            self.binding
                .iter()
                .map(|d| d.column())
                .collect::<Vec<_>>()
                .join("|")
        }
    }
}

/// Scales the whole portfolio uniformly so that its demand fits regional
/// availability in every constrained dimension.
pub fn regional_screen(
    portfolio: &Portfolio,
    limits: &RegionalLimits,
    options: &LcaOptions,
) -> (Portfolio, ScreeningReport) {
    let before = portfolio_impacts(portfolio, options);
    let fixed: ImpactVector = portfolio
        .pathways()
        .iter()
        .map(|p| fixed_impact(p, p.proposed_capacity))
        .sum();

    let mut dimensions = Vec::with_capacity(4);
    let mut scale: f64 = 1.0;
    let mut binding = Vec::new();
    for dimension in Dimension::ALL {
        let demand = before.total.get(dimension);
        let limit = limits.get(dimension);
        let max_fraction = match limit {
            Some(limit) if demand > limit * (1.0 + SCREEN_RTOL) => {
                let fixed_part = fixed.get(dimension);
                let linear = demand - fixed_part;
                if linear > 0.0 && limit > fixed_part {
                    ((limit - fixed_part) / linear).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
            _ => 1.0,
        };
        if max_fraction < 1.0 {
            binding.push(dimension);
            scale = scale.min(max_fraction);
        }
        dimensions.push(DimensionCheck {
            dimension,
            demand,
            limit,
            max_fraction,
        });
    }

    let adjusted = if binding.is_empty() {
        portfolio.clone()
    } else {
        portfolio.scaled(scale)
    };
    let after = portfolio_impacts(&adjusted, options);
    let report = ScreeningReport {
        scale,
        binding,
        dimensions,
        before,
        after,
    };
    (adjusted, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    fn spec(id: PathwayId, capacity: f64) -> PathwaySpec {
        PathwaySpec::new(id, capacity, &FactorTable::embedded()).unwrap()
    }

    #[test]
    fn throughput() {
        let opts = LcaOptions::default();
        assert_eq!(
            annual_throughput(&spec(PathwayId::Dac, 1.0), 10000.0, &opts),
            10000.0
        );
        assert_eq!(
            annual_throughput(&spec(PathwayId::H2Wind, 1.0), 0.0, &opts),
            0.0
        );
        // 300 * 8760 * 0.35 / 52
        let t = annual_throughput(&spec(PathwayId::H2Wind, 1.0), 300.0, &opts);
        assert!((t - 17_688.461_538_461_54).abs() < 1e-6, "{t}");
        assert_eq!(
            annual_throughput(&spec(PathwayId::Geothermal, 1.0), 450.0, &opts),
            450.0
        );
    }

    #[test]
    fn geothermal_inventory() {
        let i = pathway_impact(
            &spec(PathwayId::Geothermal, 450.0),
            450.0,
            &LcaOptions::default(),
        );
        assert!(rel_eq(i.water_m3, 9_019_845.0));
        assert!(rel_eq(i.land_m2, 5_591_925.0));
        assert!(rel_eq(i.carbon_t, 441_495.0));
        assert_eq!(i.energy_mwh, 0.0);
    }

    #[test]
    fn dle_inventory() {
        let i = pathway_impact(&spec(PathwayId::Dle, 1.0), 125000.0, &LcaOptions::default());
        assert!(rel_eq(i.water_m3, 16_250_000.0));
        assert!(rel_eq(i.land_m2, 2_000_000.0));
        assert!(rel_eq(i.energy_mwh, 7_387_500.0));
        assert_eq!(i.carbon_t, 0.0);
    }

    #[test]
    fn zero_capacity_charges_nothing() {
        let opts = LcaOptions::default();
        for id in PathwayId::ALL {
            assert_eq!(
                pathway_impact(&spec(id, 1.0), 0.0, &opts),
                ImpactVector::ZERO,
                "{id}"
            );
        }
        // a site opened at any positive capacity pays the whole footprint
        let i = pathway_impact(&spec(PathwayId::MswLfg, 1.0), 0.5, &opts);
        assert_eq!(i.land_m2, 2_430_000.0);
    }

    #[test]
    fn capture_composition_toggle() {
        let p = spec(PathwayId::AnimalWaste, 10.0);
        let off = LcaOptions {
            capture_composition: false,
            ..LcaOptions::default()
        };
        let plain = pathway_impact(&p, 10.0, &off);
        assert!(rel_eq(plain.water_m3, 44_766.0));
        assert_eq!(plain.energy_mwh, 0.0);
        let with = pathway_impact(&p, 10.0, &LcaOptions::default());
        // 111189 t carbon: +2.1 m3/t water, +0.4 MWh/t energy
        assert!(rel_eq(with.water_m3, 44_766.0 + 2.1 * 111_189.0));
        assert!(rel_eq(with.energy_mwh, 0.4 * 111_189.0));
        // non-WtE pathways are untouched
        let g = spec(PathwayId::Geothermal, 1.0);
        assert_eq!(
            pathway_impact(&g, 5.0, &off),
            pathway_impact(&g, 5.0, &LcaOptions::default())
        );
    }

    #[test]
    fn dac_portfolio() {
        let table = FactorTable::embedded();
        let portfolio = Portfolio::new(vec![
            PathwaySpec::new(PathwayId::Dac, 10000.0, &table).unwrap()
        ])
        .unwrap();
        let impacts = portfolio_impacts(&portfolio, &LcaOptions::default());
        assert!(rel_eq(impacts.total.water_m3, 38_000.0));
        assert!(rel_eq(impacts.total.energy_mwh, 22_000.0));
        assert!(rel_eq(impacts.total.land_m2, 4_000.0));
        let empty = portfolio_impacts(&Portfolio::empty(), &LcaOptions::default());
        assert!(empty.per_pathway.is_empty());
        assert_eq!(empty.total, ImpactVector::ZERO);
    }

    #[test]
    fn portfolio_rejects_duplicates_and_wrong_units() {
        let table = FactorTable::embedded();
        let dup = "pathway,capacity,unit\ndac,1,tonne\ndac,2,tonne\n";
        assert!(matches!(
            Portfolio::from_csv_reader(dup.as_bytes(), &table),
            Err(SitingError::DuplicatePathway(_))
        ));
        let unit = "pathway,capacity,unit\ngeothermal,1,tonne\n";
        assert!(Portfolio::from_csv_reader(unit.as_bytes(), &table).is_err());
        let unknown = "pathway,capacity,unit\ncoal,1,MW\n";
        assert!(matches!(
            Portfolio::from_csv_reader(unknown.as_bytes(), &table),
            Err(SitingError::UnknownPathway(_))
        ));
    }

    #[test]
    fn shipped_tables() {
        let table = FactorTable::embedded();
        assert_eq!(table.version().len(), 12);
        assert_eq!(table.factors(PathwayId::MswDc).unwrap().water, 303562.6);
        assert_eq!(table.factors(PathwayId::H2Solar).unwrap().energy, 52.0);
        assert_eq!(
            table.capture(),
            CaptureFactors {
                water: 2.1,
                energy: 0.4
            }
        );
        let portfolio = Portfolio::proposed_socal(&table);
        let ids: Vec<_> = portfolio.pathways().iter().map(|p| p.id).collect();
        assert_eq!(ids, PathwayId::ALL);
        assert_eq!(
            portfolio.get(PathwayId::Dle).unwrap().proposed_capacity,
            125000.0
        );
    }

    #[test]
    fn per_site_land_only_for_wte() {
        let text = EMBEDDED_FACTORS.replace(
            "geothermal,20044.1,m3/MW,12426.5,per_mw",
            "geothermal,20044.1,m3/MW,12426.5,per_site",
        );
        assert!(FactorTable::from_csv_str(&text).is_err());
    }

    fn water_only_portfolio(water: f64) -> Portfolio {
        // DAC is linear in every dimension: 3.8 m3/t water, 0.4 m2/t land
        let table = FactorTable::embedded();
        Portfolio::new(vec![
            PathwaySpec::new(PathwayId::Dac, water / 3.8, &table).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn screen_slack_keeps_portfolio() {
        let p = water_only_portfolio(100.0);
        let limits = RegionalLimits::default().with(Dimension::Water, 200.0);
        let (adjusted, report) = regional_screen(&p, &limits, &LcaOptions::default());
        assert_eq!(adjusted, p);
        assert_eq!(report.scale, 1.0);
        assert_eq!(report.binding_summary(), "no binding dimension");
    }

    #[test]
    fn screen_single_binding_ratio_halves() {
        let p = water_only_portfolio(200.0);
        let limits = RegionalLimits::default().with(Dimension::Water, 100.0);
        let (adjusted, report) = regional_screen(&p, &limits, &LcaOptions::default());
        assert!(rel_eq(report.scale, 0.5));
        assert_eq!(report.binding, vec![Dimension::Water]);
        let before = p.pathways()[0].proposed_capacity;
        assert!(rel_eq(
            adjusted.pathways()[0].proposed_capacity,
            before / 2.0
        ));
    }

    #[test]
    fn screen_takes_min_ratio() {
        // DAC at 1000/19 t: water 200 m3, land 400/19 m2; limit land to make ratio 1/3
        let table = FactorTable::embedded();
        let dac = PathwaySpec::new(PathwayId::Dac, 200.0 / 3.8, &table).unwrap();
        let p = Portfolio::new(vec![dac]).unwrap();
        let land = pathway_impact(
            &p.pathways()[0],
            p.pathways()[0].proposed_capacity,
            &LcaOptions::default(),
        )
        .land_m2;
        let limits = RegionalLimits::default()
            .with(Dimension::Water, 100.0)
            .with(Dimension::Land, land / 3.0);
        let (_, report) = regional_screen(&p, &limits, &LcaOptions::default());
        assert!(rel_eq(report.scale, 1.0 / 3.0));
        assert_eq!(report.binding, vec![Dimension::Water, Dimension::Land]);
    }

    #[test]
    fn screen_accounts_for_site_footprints() {
        let table = FactorTable::embedded();
        let lfg = PathwaySpec::new(PathwayId::MswLfg, 300.0, &table).unwrap();
        let p = Portfolio::new(vec![lfg]).unwrap();
        // below one landfill footprint nothing can be built
        let limits = RegionalLimits::default().with(Dimension::Land, 1_000_000.0);
        let (adjusted, report) = regional_screen(&p, &limits, &LcaOptions::default());
        assert_eq!(report.scale, 0.0);
        assert_eq!(adjusted.pathways()[0].proposed_capacity, 0.0);
        assert_eq!(report.after.total, ImpactVector::ZERO);
    }

    #[test]
    fn accounting_rounding_is_dyadic() {
        let v = ImpactVector {
            water_m3: 0.1,
            land_m2: 1.0 / 3.0,
            energy_mwh: 9_019_845.000000002,
            carbon_t: 0.0,
        }
        .for_accounting();
        for c in v.components() {
            assert_eq!((c * 65536.0).fract(), 0.0);
        }
        assert_eq!(v.energy_mwh, 9_019_845.0);
    }
}
