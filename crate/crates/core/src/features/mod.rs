//! Window feature extraction, SisFall characteristics, and min-max scaling.

mod export;
mod extract;
mod scaler;
mod schema;
mod sisfall;
mod stats;

pub use export::{read_feature_csv, write_feature_csv};
pub use extract::{
    average_resultant_acceleration, extract_features, feature_values, magnitude, slope, tilt_angle,
};
pub use scaler::{apply_scaler, fit_scaler, Scaler};
pub use schema::{FeatureSchema, FeatureVector, FEATURE_COUNT, GROUPS, SCHEMA_V1};
pub use sisfall::{sisfall_characteristics, SisFallFeatures, SlidingBuffer, DEFAULT_WIDTH};
pub use stats::{average_absolute_difference, axis_stats, mean, zero_crossing_rate, AxisStats};
