use serde::{Deserialize, Serialize};

use crate::error::{Result, SitingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Benefit,
    Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub direction: Direction,
}

impl Criterion {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Criterion {
            name: name.into(),
            direction,
        }
    }
}

/// Raw criteria for a set of cells, one row per cell in cell_id order.
/// `None` marks a missing value, imputed by the column median.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    criteria: Vec<Criterion>,
    row_ids: Vec<u32>,
    rows: Vec<Vec<Option<f64>>>,
}

impl FeatureMatrix {
    pub fn new(criteria: Vec<Criterion>) -> Result<Self> {
        for (i, c) in criteria.iter().enumerate() {
            if criteria[..i].iter().any(|o| o.name == c.name) {
                return Err(SitingError::invalid(
                    "criteria",
                    format!("duplicate column {}", c.name),
                ));
            }
        }
        Ok(FeatureMatrix {
            criteria,
            row_ids: Vec::new(),
            rows: Vec::new(),
        })
    }

    pub fn push_row(&mut self, cell_id: u32, values: Vec<Option<f64>>) {
        assert_eq!(
            values.len(),
            self.criteria.len(),
            "row width must match criteria"
        );
        self.row_ids.push(cell_id);
        self.rows.push(values);
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn row_ids(&self) -> &[u32] {
        &self.row_ids
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Applies `f` to every present value of one column.
    pub fn map_column(&mut self, column: usize, f: impl Fn(f64) -> f64) {
        for row in &mut self.rows {
            if let Some(v) = row[column].as_mut() {
                *v = f(*v);
            }
        }
    }

    /// Copy with missing values replaced by their column median (0 when a
    /// column has no values at all).
    pub fn imputed(&self) -> Vec<Vec<f64>> {
        let medians: Vec<f64> = (0..self.criteria.len())
            .map(|c| {
                let mut present: Vec<f64> = self.rows.iter().filter_map(|r| r[c]).collect();
                median(&mut present).unwrap_or(0.0)
            })
            .collect();
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&medians)
                    .map(|(v, m)| v.unwrap_or(*m))
                    .collect()
            })
            .collect()
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    })
}

/// Criteria rescaled to [0, 1] with 1 always the preferred end.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub names: Vec<String>,
    pub row_ids: Vec<u32>,
    pub rows: Vec<Vec<f64>>,
}

impl NormalizedMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Min-max scaling per column; cost columns are flipped and constant columns map to 0.5.
pub fn normalize(features: &FeatureMatrix) -> NormalizedMatrix {
    let mut rows = features.imputed();
    for (c, criterion) in features.criteria().iter().enumerate() {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[c]), hi.max(r[c]))
            });
        for row in &mut rows {
            let v = row[c];
            let scaled = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            row[c] = match criterion.direction {
                Direction::Benefit => scaled,
                Direction::Cost => 1.0 - scaled,
            };
        }
    }
    NormalizedMatrix {
        names: features.criteria().iter().map(|c| c.name.clone()).collect(),
        row_ids: features.row_ids().to_vec(),
        rows,
    }
}
