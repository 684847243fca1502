use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ActivityCode;

pub const SCHEMA_V1: &str = "mobiact58-v1";
pub const FEATURE_COUNT: usize = 58;

const STATS: [&str; 7] = ["mean", "median", "sd", "skew", "kurtosis", "min", "max"];
const AXES: [&str; 3] = ["x", "y", "z"];

/// Named groups of the schema in vector order, with their sizes.
pub const GROUPS: [(&str, usize); 7] = [
    ("raw_axis_stats", 21),
    ("abs_axis_stats", 21),
    ("slope", 2),
    ("tilt", 4),
    ("magnitude", 6),
    ("avg_abs_diff", 3),
    ("avg_resultant_acc", 1),
];

/// Ordered feature names for one schema version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub version: &'static str,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn v1() -> Self {
        let mut names = Vec::with_capacity(FEATURE_COUNT);
        for axis in AXES {
            names.extend(STATS.iter().map(|s| format!("{axis}_{s}")));
        }
        for axis in AXES {
            names.extend(STATS.iter().map(|s| format!("abs_{axis}_{s}")));
        }
        names.push("slope_raw".into());
        names.push("slope_abs".into());
        names.extend(["mean", "sd", "skew", "kurtosis"].map(|s| format!("tilt_{s}")));
        names.extend(["mean", "sd", "min", "max", "range", "zcr"].map(|s| format!("mag_{s}")));
        names.extend(AXES.map(|a| format!("aad_{a}")));
        names.push("avg_resultant_acc".into());
        Self {
            version: SCHEMA_V1,
            names,
        }
    }

    pub fn by_version(version: &str) -> Result<Self> {
        match version {
            SCHEMA_V1 => Ok(Self::v1()),
            other => Err(Error::SchemaMismatch {
                expected: SCHEMA_V1.into(),
                found: other.into(),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::v1()
    }
}

/// A window's feature values in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_version: String,
    pub values: Vec<f64>,
    pub device_id: String,
    pub t_start: i64,
    pub t_end: i64,
    pub label: Option<ActivityCode>,
}

impl FeatureVector {
    /// A vector detached from any window, e.g. a row read back from CSV.
    pub fn from_values(values: Vec<f64>, label: Option<ActivityCode>) -> Self {
        Self {
            schema_version: SCHEMA_V1.into(),
            values,
            device_id: String::new(),
            t_start: 0,
            t_end: 0,
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
