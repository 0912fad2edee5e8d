//! C ABI over `siting_core`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`SitingStatus`]; the message for the most recent failure on the calling
//! thread is available from [`siting_last_error`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use siting_core::sim::{run_simulation, write_outputs, SimulationOutcome};
use siting_core::{
    FactorTable, Fixture, Grid, GridSchema, LcaOptions, PathwayId, PathwaySpec, Portfolio,
    ScenarioConfig, SitingError,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SitingStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Input = 4,
    Config = 5,
    Portfolio = 6,
    Insufficient = 7,
    OutOfRange = 8,
    Internal = 9,
    Panic = 10,
}

impl From<&SitingError> for SitingStatus {
    fn from(e: &SitingError) -> Self {
        match e.kind() {
            "io" => SitingStatus::Io,
            "input" | "lookup" => SitingStatus::Input,
            "config" | "clustering" => SitingStatus::Config,
            "portfolio" => SitingStatus::Portfolio,
            "insufficient" => SitingStatus::Insufficient,
            _ => SitingStatus::Internal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SitingImpact {
    pub water_m3: f64,
    pub land_m2: f64,
    pub energy_mwh: f64,
    pub carbon_t: f64,
}

/// One deployment record. `cell_id` is -1 when the pathway was rejected.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SitingRecord {
    pub step: u32,
    /// Index into the pathway list; see [`siting_pathway_name`].
    pub pathway: u32,
    pub cell_id: i64,
    pub requested: f64,
    pub deployed: f64,
    pub residual: f64,
    pub impact: SitingImpact,
}

pub struct SitingGrid(Grid);
pub struct SitingPortfolio(Portfolio);
pub struct SitingScenario(ScenarioConfig);
pub struct SitingRun(SimulationOutcome);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(SitingStatus, String);

impl From<SitingError> for Failure {
    fn from(e: SitingError) -> Self {
        Failure(SitingStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SitingStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SitingStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SitingStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("panic inside siting library");
            SitingStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            SitingStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn siting_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version and conversion-factor table hash. Static storage.
#[no_mangle]
pub extern "C" fn siting_version() -> *const c_char {
    static VERSION: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    VERSION
        .get_or_init(|| {
            let text = format!(
                "{} (factors {})",
                env!("CARGO_PKG_VERSION"),
                FactorTable::embedded().version()
            );
            CString::new(text).unwrap_or_default()
        })
        .as_ptr()
}

#[no_mangle]
pub extern "C" fn siting_pathway_count() -> usize {
    PathwayId::ALL.len()
}

/// Canonical pathway name for an index, or null when out of range. Static storage.
#[no_mangle]
pub extern "C" fn siting_pathway_name(index: u32) -> *const c_char {
    static NAMES: std::sync::OnceLock<Vec<CString>> = std::sync::OnceLock::new();
    let names = NAMES.get_or_init(|| {
        PathwayId::ALL
            .iter()
            .map(|p| CString::new(p.as_str()).unwrap_or_default())
            .collect()
    });
    names
        .get(index as usize)
        .map_or(ptr::null(), |n| n.as_ptr())
}

/// Production-stage impact of one pathway at `capacity` (MW or tonne/yr).
#[no_mangle]
pub unsafe extern "C" fn siting_pathway_impact(
    pathway: *const c_char,
    capacity: f64,
    capacity_factor: f64,
    capture_composition: bool,
    out: *mut SitingImpact,
) -> SitingStatus {
    guard(|| {
        let id: PathwayId = str_arg(pathway, "pathway")?.parse()?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(Failure(
                SitingStatus::OutOfRange,
                "capacity must be finite and non-negative".into(),
            ));
        }
        if !(capacity_factor > 0.0 && capacity_factor <= 1.0) {
            return Err(Failure(
                SitingStatus::OutOfRange,
                "capacity_factor must lie in (0, 1]".into(),
            ));
        }
        let spec = PathwaySpec::new(id, capacity, &FactorTable::embedded())?;
        let options = LcaOptions {
            capacity_factor,
            capture_composition,
        };
        let v = siting_core::pathway_impact(&spec, capacity, &options);
        *out = SitingImpact {
            water_m3: v.water_m3,
            land_m2: v.land_m2,
            energy_mwh: v.energy_mwh,
            carbon_t: v.carbon_t,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_grid_load(
    path: *const c_char,
    out: *mut *mut SitingGrid,
) -> SitingStatus {
    guard(|| {
        let grid = Grid::load(str_arg(path, "path")?, &GridSchema::default())?;
        put(out, SitingGrid(grid))
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_grid_cell_count(grid: *const SitingGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn siting_grid_free(grid: *mut SitingGrid) {
    free(grid)
}

#[no_mangle]
pub unsafe extern "C" fn siting_portfolio_load(
    path: *const c_char,
    out: *mut *mut SitingPortfolio,
) -> SitingStatus {
    guard(|| {
        let portfolio = Portfolio::load(str_arg(path, "path")?, &FactorTable::embedded())?;
        put(out, SitingPortfolio(portfolio))
    })
}

/// The shipped regional portfolio.
#[no_mangle]
pub unsafe extern "C" fn siting_portfolio_default(out: *mut *mut SitingPortfolio) -> SitingStatus {
    guard(|| {
        put(
            out,
            SitingPortfolio(Portfolio::proposed_socal(&FactorTable::embedded())),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_portfolio_free(portfolio: *mut SitingPortfolio) {
    free(portfolio)
}

#[no_mangle]
pub unsafe extern "C" fn siting_scenario_load(
    path: *const c_char,
    out: *mut *mut SitingScenario,
) -> SitingStatus {
    guard(|| {
        put(
            out,
            SitingScenario(ScenarioConfig::load(str_arg(path, "path")?)?),
        )
    })
}

/// `"baseline"` or `"unconstrained"`.
#[no_mangle]
pub unsafe extern "C" fn siting_scenario_preset(
    name: *const c_char,
    out: *mut *mut SitingScenario,
) -> SitingStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let scenario = ScenarioConfig::preset(name)
            .ok_or_else(|| SitingError::UnknownPreset(name.to_string()))?;
        put(out, SitingScenario(scenario))
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_scenario_set_seed(
    scenario: *mut SitingScenario,
    seed: u64,
) -> SitingStatus {
    guard(|| {
        scenario.as_mut().ok_or_else(|| null("scenario"))?.0.seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_scenario_free(scenario: *mut SitingScenario) {
    free(scenario)
}

/// Builds a named synthetic input set (`socal-like`, `aw-shortfall`, `shared-cell`).
/// Any of the output pointers may be null if that part is not wanted.
#[no_mangle]
pub unsafe extern "C" fn siting_fixture(
    preset: *const c_char,
    seed: u64,
    out_grid: *mut *mut SitingGrid,
    out_portfolio: *mut *mut SitingPortfolio,
    out_scenario: *mut *mut SitingScenario,
) -> SitingStatus {
    guard(|| {
        let f = Fixture::preset(str_arg(preset, "preset")?, seed)?;
        if !out_grid.is_null() {
            put(out_grid, SitingGrid(f.grid))?;
        }
        if !out_portfolio.is_null() {
            put(out_portfolio, SitingPortfolio(f.portfolio))?;
        }
        if !out_scenario.is_null() {
            put(out_scenario, SitingScenario(f.scenario))?;
        }
        Ok(())
    })
}

/// Screens and sites the portfolio on a copy of the grid. Inputs are not modified.
#[no_mangle]
pub unsafe extern "C" fn siting_run(
    grid: *const SitingGrid,
    portfolio: *const SitingPortfolio,
    scenario: *const SitingScenario,
    out: *mut *mut SitingRun,
) -> SitingStatus {
    guard(|| {
        let grid = ref_arg(grid, "grid")?;
        let portfolio = ref_arg(portfolio, "portfolio")?;
        let scenario = ref_arg(scenario, "scenario")?;
        scenario.0.validate()?;
        let table = FactorTable::embedded();
        let outcome = run_simulation(grid.0.clone(), &portfolio.0, &scenario.0, table.version())?;
        put(out, SitingRun(outcome))
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_run_record_count(run: *const SitingRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.report.records.len())
}

#[no_mangle]
pub unsafe extern "C" fn siting_run_record(
    run: *const SitingRun,
    index: usize,
    out: *mut SitingRecord,
) -> SitingStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = run.0.report.records.get(index).ok_or_else(|| {
            Failure(
                SitingStatus::OutOfRange,
                format!("record index {index} out of range"),
            )
        })?;
        let i = &r.site_impact;
        *out = SitingRecord {
            step: r.step,
            pathway: PathwayId::ALL
                .iter()
                .position(|p| *p == r.pathway)
                .unwrap_or(0) as u32,
            cell_id: r.cell_id.map_or(-1, i64::from),
            requested: r.requested_capacity,
            deployed: r.deployed_capacity,
            residual: r.residual_capacity,
            impact: SitingImpact {
                water_m3: i.water_m3,
                land_m2: i.land_m2,
                energy_mwh: i.energy_mwh,
                carbon_t: i.carbon_t,
            },
        };
        Ok(())
    })
}

/// Copies the NUL-terminated decision trace of a record into `buf`.
/// `*len` receives the full length including the terminator; when `cap` is
/// too small nothing is copied and `OutOfRange` is returned.
#[no_mangle]
pub unsafe extern "C" fn siting_run_record_trace(
    run: *const SitingRun,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> SitingStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let r = run.0.report.records.get(index).ok_or_else(|| {
            Failure(
                SitingStatus::OutOfRange,
                format!("record index {index} out of range"),
            )
        })?;
        let trace = r.trace_string();
        let needed = trace.len() + 1;
        if !len.is_null() {
            *len = needed;
        }
        if buf.is_null() || cap < needed {
            return Err(Failure(
                SitingStatus::OutOfRange,
                format!("trace needs {needed} bytes"),
            ));
        }
        ptr::copy_nonoverlapping(trace.as_ptr(), buf.cast::<u8>(), trace.len());
        *buf.add(trace.len()) = 0;
        Ok(())
    })
}

/// Writes `report.json`, `deployments.csv`, `impacts_grid.csv` and `ledger.csv`.
#[no_mangle]
pub unsafe extern "C" fn siting_run_write(
    run: *const SitingRun,
    out_dir: *const c_char,
) -> SitingStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        write_outputs(&run.0, Path::new(str_arg(out_dir, "out_dir")?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn siting_run_free(run: *mut SitingRun) {
    free(run)
}
