use std::io::{BufRead, Write};

use super::schema::{FeatureSchema, FeatureVector};
use crate::error::{Error, Result};
use crate::ingest::{ActivityCode, BinaryClass};

const LABEL_COLUMNS: [&str; 2] = ["label_code", "label_class"];

/// Writes feature vectors as CSV: the schema names as header, then one row
/// per vector. With `labeled`, two trailing columns hold the window's
/// activity code and class. Values are written in shortest round-trip form.
pub fn write_feature_csv<W: Write>(
    mut out: W,
    schema: &FeatureSchema,
    rows: &[FeatureVector],
    labeled: bool,
) -> Result<()> {
    let mut header = schema.names.join(",");
    if labeled {
        header.push(',');
        header.push_str(&LABEL_COLUMNS.join(","));
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for fv in rows {
        if fv.schema_version != schema.version || fv.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: schema.version.into(),
                found: fv.schema_version.clone(),
            });
        }
        line.clear();
        for (i, v) in fv.values.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        if labeled {
            let label = fv.label.as_ref().ok_or(Error::MissingLabel)?;
            line.push_str(&format!(",{},{}", label.code, label.class));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a feature CSV written by [`write_feature_csv`]. Label columns are
/// optional; the header must otherwise match the schema exactly.
pub fn read_feature_csv<R: BufRead>(
    input: R,
    schema: &FeatureSchema,
) -> Result<Vec<FeatureVector>> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::InsufficientData("feature CSV is empty".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let width = schema.len();
    let labeled = match cols.len() {
        n if n == width => false,
        n if n == width + 2 && cols[width..] == LABEL_COLUMNS => true,
        _ => {
            return Err(Error::SchemaMismatch {
                expected: format!("{} ({} features)", schema.version, width),
                found: format!("header with {} columns", cols.len()),
            })
        }
    };
    if cols[..width].iter().zip(&schema.names).any(|(a, b)| a != b) {
        return Err(Error::SchemaMismatch {
            expected: schema.version.into(),
            found: "different feature names".into(),
        });
    }

    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("feature CSV row {}: {what}", lineno + 2));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(bad("wrong number of columns"));
        }
        let values = fields[..width]
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("non-finite or non-numeric value"))?;
        let label = if labeled {
            Some(ActivityCode {
                code: fields[width].to_string(),
                class: BinaryClass::parse(fields[width + 1]).map_err(|_| bad("bad class"))?,
            })
        } else {
            None
        };
        let mut fv = FeatureVector::from_values(values, label);
        fv.schema_version = schema.version.into();
        rows.push(fv);
    }
    Ok(rows)
}
