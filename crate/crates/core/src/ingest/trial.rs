use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::activity::{ActivityCode, BinaryClass, Vocabulary};
use super::sample::{convert_adc_to_g, Sample, STANDARD_GRAVITY};
use crate::error::{Error, Result};

/// A column addressed by zero-based index or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Unit of the acceleration columns as stored in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "m/s2", alias = "mps2", alias = "m/s^2")]
    MetersPerSecondSquared,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "adc_bits")]
    AdcBits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Ns,
    Us,
    Ms,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcSpec {
    pub range_g: f64,
    pub resolution_bits: u32,
}

impl Default for AdcSpec {
    fn default() -> Self {
        Self {
            range_g: 16.0,
            resolution_bits: 13,
        }
    }
}

/// Where a trial's activity labels come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// No labels (live or unlabeled data).
    None,
    /// A per-row label column.
    Column(ColumnRef),
    /// The leading `_`-separated token of the file name, e.g. `FOL_1_1.csv`.
    Filename,
}

/// Describes how a delimited trial file maps onto [`Sample`] fields.
///
/// Usually loaded from a TOML file:
///
/// ```toml
/// delimiter = ","
/// header = true
/// unit = "m/s2"
/// time_unit = "ns"
///
/// [columns]
/// timestamp = "timestamp"
/// ax = "acc_x"
/// ay = "acc_y"
/// az = "acc_z"
///
/// [label]
/// column = "label"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub header: bool,
    #[serde(default = "default_unit")]
    pub unit: Unit,
    #[serde(default = "default_time_unit")]
    pub time_unit: TimeUnit,
    #[serde(default)]
    pub adc: AdcSpec,
    /// Used to synthesize timestamps when the file has no timestamp column.
    #[serde(default)]
    pub sample_rate_hz: Option<f64>,
    pub columns: Columns,
    #[serde(default = "default_label")]
    pub label: LabelSource,
    /// Extra activity codes beyond the MobiAct vocabulary.
    #[serde(default)]
    pub extra_codes: BTreeMap<String, BinaryClass>,
    /// Adds the SisFall F01..F15 / D01..D19 codes.
    #[serde(default)]
    pub sisfall_codes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    #[serde(default)]
    pub timestamp: Option<ColumnRef>,
    pub ax: ColumnRef,
    pub ay: ColumnRef,
    pub az: ColumnRef,
}

fn default_delimiter() -> char {
    ','
}
fn default_unit() -> Unit {
    Unit::MetersPerSecondSquared
}
fn default_time_unit() -> TimeUnit {
    TimeUnit::Ms
}
fn default_label() -> LabelSource {
    LabelSource::None
}

impl ColumnMapping {
    /// `t,ax,ay,az[,label]` by position, no header, m/s², milliseconds.
    pub fn positional(labeled: bool) -> Self {
        Self {
            delimiter: ',',
            header: false,
            unit: Unit::MetersPerSecondSquared,
            time_unit: TimeUnit::Ms,
            adc: AdcSpec::default(),
            sample_rate_hz: None,
            columns: Columns {
                timestamp: Some(ColumnRef::Index(0)),
                ax: ColumnRef::Index(1),
                ay: ColumnRef::Index(2),
                az: ColumnRef::Index(3),
            },
            label: if labeled {
                LabelSource::Column(ColumnRef::Index(4))
            } else {
                LabelSource::None
            },
            extra_codes: BTreeMap::new(),
            sisfall_codes: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mapping: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("column mapping: {e}")))?;
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn vocabulary(&self) -> Vocabulary {
        let mut vocab = Vocabulary::mobiact();
        if self.sisfall_codes {
            vocab = vocab.with_sisfall();
        }
        for (code, class) in &self.extra_codes {
            vocab = vocab.with_extra(code, *class);
        }
        vocab
    }

    pub fn validate(&self) -> Result<()> {
        if self.unit == Unit::AdcBits && !(8..=16).contains(&self.adc.resolution_bits) {
            return Err(Error::Config(format!(
                "adc.resolution_bits must be in 8..=16, got {}",
                self.adc.resolution_bits
            )));
        }
        if self.columns.timestamp.is_none() {
            match self.sample_rate_hz {
                Some(hz) if hz > 0.0 && hz.is_finite() => {}
                _ => {
                    return Err(Error::Config(
                        "sample_rate_hz is required when no timestamp column is mapped".into(),
                    ))
                }
            }
        }
        let mut refs = vec![&self.columns.ax, &self.columns.ay, &self.columns.az];
        if let Some(t) = &self.columns.timestamp {
            refs.push(t);
        }
        if let LabelSource::Column(c) = &self.label {
            refs.push(c);
        }
        let mut seen = HashSet::new();
        for r in refs {
            if !seen.insert(r) {
                return Err(Error::Config(format!("column {r:?} is mapped twice")));
            }
        }
        Ok(())
    }

    fn resolve(&self, header: Option<&[&str]>) -> Result<Resolved> {
        let lookup = |r: &ColumnRef| -> Result<usize> {
            match r {
                ColumnRef::Index(i) => Ok(*i),
                ColumnRef::Name(name) => header
                    .ok_or_else(|| {
                        Error::Config(format!("column `{name}` named but mapping has no header"))
                    })?
                    .iter()
                    .position(|h| h.trim() == name)
                    .ok_or_else(|| Error::Parse(format!("header has no column `{name}`"))),
            }
        };
        let resolved = Resolved {
            timestamp: self.columns.timestamp.as_ref().map(&lookup).transpose()?,
            ax: lookup(&self.columns.ax)?,
            ay: lookup(&self.columns.ay)?,
            az: lookup(&self.columns.az)?,
            label: match &self.label {
                LabelSource::Column(c) => Some(lookup(c)?),
                _ => None,
            },
        };
        let mut all = vec![resolved.ax, resolved.ay, resolved.az];
        all.extend(resolved.timestamp);
        all.extend(resolved.label);
        let distinct: HashSet<_> = all.iter().collect();
        if distinct.len() != all.len() {
            return Err(Error::Config("mapped columns are not distinct".into()));
        }
        Ok(resolved)
    }

    fn acceleration(&self, field: &str) -> Option<f64> {
        let v = match self.unit {
            Unit::MetersPerSecondSquared => field.parse::<f64>().ok()?,
            Unit::G => field.parse::<f64>().ok()? * STANDARD_GRAVITY,
            Unit::AdcBits => {
                let bits: i64 = field.parse().ok()?;
                convert_adc_to_g(bits, self.adc.range_g, self.adc.resolution_bits)
                    * STANDARD_GRAVITY
            }
        };
        v.is_finite().then_some(v)
    }

    fn timestamp(&self, field: &str) -> Option<i64> {
        if let Ok(v) = field.parse::<i64>() {
            return Some(match self.time_unit {
                TimeUnit::Ns => v.div_euclid(1_000_000),
                TimeUnit::Us => v.div_euclid(1_000),
                TimeUnit::Ms => v,
                TimeUnit::S => v.checked_mul(1_000)?,
            });
        }
        let v: f64 = field.parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        let ms = match self.time_unit {
            TimeUnit::Ns => v / 1e6,
            TimeUnit::Us => v / 1e3,
            TimeUnit::Ms => v,
            TimeUnit::S => v * 1e3,
        };
        Some(ms.floor() as i64)
    }
}

struct Resolved {
    timestamp: Option<usize>,
    ax: usize,
    ay: usize,
    az: usize,
    label: Option<usize>,
}

/// Samples parsed from one trial plus row accounting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTrial {
    pub samples: Vec<Sample>,
    /// Non-blank data rows seen (excluding the header).
    pub rows: usize,
    pub malformed: usize,
}

/// Parses delimited trial text into samples, in file order.
///
/// Malformed rows (missing fields, non-numeric or non-finite values, unknown
/// labels) are skipped and counted. More than half malformed is fatal.
pub fn parse_trial_file(bytes: &[u8], mapping: &ColumnMapping) -> Result<ParsedTrial> {
    parse_trial_as(bytes, mapping, "trial", None)
}

/// [`parse_trial_file`] with an explicit device id and an optional label
/// applied to every row.
pub fn parse_trial_as(
    bytes: &[u8],
    mapping: &ColumnMapping,
    device_id: &str,
    fixed_label: Option<&ActivityCode>,
) -> Result<ParsedTrial> {
    mapping.validate()?;
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse(format!("input is not valid UTF-8: {e}")))?;
    let vocab = mapping.vocabulary();
    let delim = mapping.delimiter;

    let mut lines = text.lines().map(clean_line).filter(|l| !l.is_empty());
    let header: Option<Vec<&str>> = if mapping.header {
        lines
            .next()
            .map(|h| h.split(delim).map(str::trim).collect())
    } else {
        None
    };
    if mapping.header && header.is_none() {
        return Ok(ParsedTrial::default());
    }
    let cols = mapping.resolve(header.as_deref())?;
    let period_ms = mapping.sample_rate_hz.map(|hz| 1000.0 / hz);

    let mut out = ParsedTrial::default();
    let mut fields: Vec<&str> = Vec::new();
    for line in lines {
        out.rows += 1;
        fields.clear();
        fields.extend(line.split(delim).map(str::trim));
        let index = out.rows - 1;
        match parse_row(&fields, &cols, mapping, &vocab, period_ms, index) {
            Some((t_ms, ax, ay, az, label)) => {
                let label = fixed_label.cloned().or(label);
                out.samples.push(Sample {
                    device_id: device_id.to_string(),
                    t_ms,
                    ax,
                    ay,
                    az,
                    label,
                });
            }
            None => out.malformed += 1,
        }
    }
    if out.malformed * 2 > out.rows {
        return Err(Error::TooManyMalformed {
            malformed: out.malformed,
            rows: out.rows,
        });
    }
    Ok(out)
}

type Row = (i64, f64, f64, f64, Option<ActivityCode>);

fn parse_row(
    fields: &[&str],
    cols: &Resolved,
    mapping: &ColumnMapping,
    vocab: &Vocabulary,
    period_ms: Option<f64>,
    index: usize,
) -> Option<Row> {
    let t_ms = match cols.timestamp {
        Some(i) => mapping.timestamp(fields.get(i)?)?,
        None => (index as f64 * period_ms?).round() as i64,
    };
    let ax = mapping.acceleration(fields.get(cols.ax)?)?;
    let ay = mapping.acceleration(fields.get(cols.ay)?)?;
    let az = mapping.acceleration(fields.get(cols.az)?)?;
    let label = match cols.label {
        Some(i) => Some(vocab.code(fields.get(i)?).ok()?),
        None => None,
    };
    Some((t_ms, ax, ay, az, label))
}

/// Strips surrounding whitespace and a trailing `;` record terminator.
fn clean_line(line: &str) -> &str {
    let line = line.trim();
    line.strip_suffix(';').unwrap_or(line).trim_end()
}

/// Activity token encoded in a trial file name: the leading `_`-separated
/// component of the stem (`FOL_1_1_annotated.csv` → `FOL`).
pub fn label_token_from_path(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    let token = stem.split('_').next()?;
    (!token.is_empty()).then(|| token.to_ascii_uppercase())
}

/// Reads and parses a trial file from disk. The device id is the file stem.
pub fn load_trial(path: &Path, mapping: &ColumnMapping) -> Result<ParsedTrial> {
    let bytes = std::fs::read(path)?;
    let device_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trial")
        .to_string();
    let fixed = match mapping.label {
        LabelSource::Filename => {
            let token = label_token_from_path(path).ok_or_else(|| {
                Error::Parse(format!("no activity token in file name {}", path.display()))
            })?;
            Some(mapping.vocabulary().code(&token)?)
        }
        _ => None,
    };
    parse_trial_as(&bytes, mapping, &device_id, fixed.as_ref())
}
