use std::path::PathBuf;

use thiserror::Error;

use crate::grid::Shortfall;

pub type Result<T, E = SitingError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SitingError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column {column}: {message}")]
    MalformedRow {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing required column {0}")]
    MissingColumn(String),

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("duplicate cell_id {0}")]
    DuplicateCell(u32),

    #[error("cell {cell_id} at ({x_km}, {y_km}) breaks row-major ordering or the 10 km lattice")]
    Layout { cell_id: u32, x_km: f64, y_km: f64 },

    #[error("unknown cell_id {0}")]
    UnknownCell(u32),

    #[error("unknown layer {0}")]
    UnknownLayer(String),

    #[error("aggregation is only allowed before any consumption")]
    AggregationAfterConsumption,

    #[error("insufficient resources in cell {cell_id}: {}", format_shortfalls(.shortfalls))]
    Insufficient {
        cell_id: u32,
        shortfalls: Vec<Shortfall>,
    },

    #[error("unknown pathway {0}")]
    UnknownPathway(String),

    #[error("duplicate pathway {0}")]
    DuplicatePathway(String),

    #[error("invalid value for {field}: {message}")]
    InvalidValue { field: String, message: String },

    #[error("weights for {field} must be non-negative and sum to 1 (got sum {sum})")]
    InvalidWeights { field: String, sum: f64 },

    #[error("weights for {field} do not match criteria: {message}")]
    WeightKeys { field: String, message: String },

    #[error("k = {k} exceeds the number of rows ({rows})")]
    TooManyClusters { k: usize, rows: usize },

    #[error("scenario parse error: {0}")]
    Scenario(#[from] toml::de::Error),

    #[error("serialization error: {0}")]
    Serialize(String),

    #[error("unknown fixture preset {0}")]
    UnknownPreset(String),
}

impl SitingError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SitingError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        SitingError::InvalidValue {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short stable tag used in machine-readable error lines and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            SitingError::Io { .. } => "io",
            SitingError::Csv(_)
            | SitingError::MalformedRow { .. }
            | SitingError::MissingColumn(_)
            | SitingError::UnknownColumn(_)
            | SitingError::DuplicateCell(_)
            | SitingError::Layout { .. } => "input",
            SitingError::UnknownCell(_) | SitingError::UnknownLayer(_) => "lookup",
            SitingError::AggregationAfterConsumption => "state",
            SitingError::Insufficient { .. } => "insufficient",
            SitingError::UnknownPathway(_) | SitingError::DuplicatePathway(_) => "portfolio",
            SitingError::InvalidValue { .. }
            | SitingError::InvalidWeights { .. }
            | SitingError::WeightKeys { .. }
            | SitingError::Scenario(_)
            | SitingError::UnknownPreset(_) => "config",
            SitingError::TooManyClusters { .. } => "clustering",
            SitingError::Serialize(_) => "serialize",
        }
    }
}

fn format_shortfalls(shortfalls: &[Shortfall]) -> String {
    shortfalls
        .iter()
        .map(|s| format!("{} needs {} has {}", s.resource, s.requested, s.available))
        .collect::<Vec<_>>()
        .join("; ")
}
