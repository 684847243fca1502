//! Dataset parsing, activity vocabulary, and sample sources.

mod activity;
mod sample;
mod source;
mod trial;

pub use activity::{map_activity_to_class, ActivityCode, BinaryClass, Vocabulary};
pub use sample::{convert_adc_to_g, Sample, STANDARD_GRAVITY};
pub use source::{parse_wire_line, ReplaySource, SampleOutlet, SocketSource, Speed};
pub use trial::{
    label_token_from_path, load_trial, parse_trial_as, parse_trial_file, AdcSpec, ColumnMapping,
    ColumnRef, Columns, LabelSource, ParsedTrial, TimeUnit, Unit,
};
