use serde::{Deserialize, Serialize};

use super::schema::FeatureVector;
use crate::error::{Error, Result};

/// Per-feature min-max scaling learned from a fit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub schema_version: String,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Scales raw values: `(v − min) / (max − min)`, 0 where `max == min`.
    /// Values outside the fit range are not clamped.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} features", self.len()),
                found: format!("{} features", values.len()),
            });
        }
        Ok(values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi == lo { 0.0 } else { (v - lo) / (hi - lo) })
            .collect())
    }

    /// Scaler covering both fit sets.
    pub fn merge(&self, other: &Scaler) -> Result<Scaler> {
        if self.schema_version != other.schema_version || self.len() != other.len() {
            return Err(Error::SchemaMismatch {
                expected: self.schema_version.clone(),
                found: other.schema_version.clone(),
            });
        }
        Ok(Scaler {
            schema_version: self.schema_version.clone(),
            min: self
                .min
                .iter()
                .zip(&other.min)
                .map(|(a, b)| a.min(*b))
                .collect(),
            max: self
                .max
                .iter()
                .zip(&other.max)
                .map(|(a, b)| a.max(*b))
                .collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() {
            return Err(Error::Artifact("scaler min/max lengths differ".into()));
        }
        let ok = self
            .min
            .iter()
            .zip(&self.max)
            .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi);
        if !ok {
            return Err(Error::Artifact(
                "scaler bounds must be finite with min <= max".into(),
            ));
        }
        Ok(())
    }
}

pub fn fit_scaler(set: &[FeatureVector]) -> Result<Scaler> {
    let first = set
        .first()
        .ok_or_else(|| Error::InsufficientData("cannot fit a scaler on an empty set".into()))?;
    let width = first.len();
    let mut min = first.values.clone();
    let mut max = first.values.clone();
    for fv in &set[1..] {
        if fv.schema_version != first.schema_version || fv.len() != width {
            return Err(Error::SchemaMismatch {
                expected: first.schema_version.clone(),
                found: fv.schema_version.clone(),
            });
        }
        for (k, &v) in fv.values.iter().enumerate() {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    Ok(Scaler {
        schema_version: first.schema_version.clone(),
        min,
        max,
    })
}

pub fn apply_scaler(fv: &FeatureVector, scaler: &Scaler) -> Result<FeatureVector> {
    if fv.schema_version != scaler.schema_version {
        return Err(Error::SchemaMismatch {
            expected: scaler.schema_version.clone(),
            found: fv.schema_version.clone(),
        });
    }
    Ok(FeatureVector {
        values: scaler.transform(&fv.values)?,
        ..fv.clone()
    })
}
