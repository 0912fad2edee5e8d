use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::NormalizedMatrix;
use crate::error::{Result, SitingError};

pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Criterion weights on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights(BTreeMap<String, f64>);

impl Weights {
    /// Validates non-negativity and a unit sum; `field` names the weights in errors.
    pub fn new(field: &str, weights: BTreeMap<String, f64>) -> Result<Self> {
        validate_simplex(field, weights.values().copied())?;
        Ok(Weights(weights))
    }

    pub fn equal<S: AsRef<str>>(names: &[S]) -> Self {
        let w = 1.0 / names.len() as f64;
        Weights(names.iter().map(|n| (n.as_ref().to_string(), w)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }

    /// Weights in the given column order; every column needs exactly one weight.
    pub fn aligned(&self, field: &str, names: &[String]) -> Result<Vec<f64>> {
        let missing: Vec<&str> = names
            .iter()
            .filter(|n| !self.0.contains_key(*n))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = self
            .0
            .keys()
            .filter(|k| !names.contains(k))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(SitingError::WeightKeys {
                field: field.to_string(),
                message: format!(
                    "missing [{}], extra [{}]",
                    missing.join(","),
                    extra.join(",")
                ),
            });
        }
        Ok(names.iter().map(|n| self.0[n]).collect())
    }
}

pub fn validate_simplex(field: &str, weights: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !(0.0..=1.0).contains(&w) {
            return Err(SitingError::InvalidWeights {
                field: field.to_string(),
                sum: f64::NAN,
            });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(SitingError::InvalidWeights {
            field: field.to_string(),
            sum,
        });
    }
    Ok(())
}

/// Weighted sum of one row, clamped to [0, 1] against rounding.
pub fn weighted_sum(row: &[f64], weights: &[f64]) -> f64 {
    row.iter()
        .zip(weights)
        .map(|(x, w)| w * x)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Weighted-sum score per cell, in row order.
pub fn mcda_score(features: &NormalizedMatrix, weights: &Weights) -> Result<BTreeMap<u32, f64>> {
    let w = weights.aligned("criterion weights", &features.names)?;
    Ok(features
        .row_ids
        .iter()
        .zip(&features.rows)
        .map(|(id, row)| (*id, weighted_sum(row, &w)))
        .collect())
}
