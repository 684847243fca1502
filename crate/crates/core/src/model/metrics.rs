use std::fmt;

use serde::{Deserialize, Serialize};

use super::mlp::{forward, MlpModel};
use super::train::{predict_class, Labeled};
use crate::error::{Error, Result};
use crate::ingest::BinaryClass;

/// Binary classification metrics. Confusion rows are the true class and
/// columns the predicted class, both ordered `[FALL, ADL]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub counts: [[u64; 2]; 2],
    pub normalized: [[f64; 2]; 2],
    pub samples: u64,
}

fn index(class: BinaryClass) -> usize {
    match class {
        BinaryClass::Fall => 0,
        BinaryClass::Adl => 1,
    }
}

impl Metrics {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (BinaryClass, BinaryClass)>) -> Result<Self> {
        let mut counts = [[0u64; 2]; 2];
        for (truth, predicted) in pairs {
            counts[index(truth)][index(predicted)] += 1;
        }
        let samples: u64 = counts.iter().flatten().sum();
        if samples == 0 {
            return Err(Error::InsufficientData("no samples to evaluate".into()));
        }
        let mut normalized = [[0.0; 2]; 2];
        for (row, out) in counts.iter().zip(normalized.iter_mut()) {
            let total = row[0] + row[1];
            if total > 0 {
                out[0] = row[0] as f64 / total as f64;
                out[1] = row[1] as f64 / total as f64;
            }
        }
        Ok(Self {
            accuracy: (counts[0][0] + counts[1][1]) as f64 / samples as f64,
            counts,
            normalized,
            samples,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "accuracy: {:.4} ({} samples)",
            self.accuracy, self.samples
        )?;
        writeln!(f)?;
        writeln!(f, "counts           pred FALL   pred ADL")?;
        for (name, row) in ["true FALL", "true ADL "].iter().zip(&self.counts) {
            writeln!(f, "{name}      {:>10} {:>10}", row[0], row[1])?;
        }
        writeln!(f)?;
        writeln!(f, "normalized       pred FALL   pred ADL")?;
        for (name, row) in ["true FALL", "true ADL "].iter().zip(&self.normalized) {
            writeln!(f, "{name}      {:>10.4} {:>10.4}", row[0], row[1])?;
        }
        Ok(())
    }
}

pub fn evaluate(model: &MlpModel, data: &[Labeled]) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no samples to evaluate".into()));
    }
    let mut pairs = Vec::with_capacity(data.len());
    for d in data {
        pairs.push((d.class, predict_class(forward(model, &d.features)?)));
    }
    Metrics::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BinaryClass::{Adl, Fall};

    #[test]
    fn perfect_predictions() {
        let m = Metrics::from_pairs([(Fall, Fall), (Adl, Adl), (Adl, Adl)]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.counts, [[1, 0], [0, 2]]);
        assert_eq!(m.normalized, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn constant_adl_predictor() {
        let pairs = (0..40).map(|i| (if i < 10 { Fall } else { Adl }, Adl));
        let m = Metrics::from_pairs(pairs).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.normalized[0], [0.0, 1.0]);
    }

    #[test]
    fn empty_row_stays_zero() {
        let m = Metrics::from_pairs([(Adl, Fall), (Adl, Adl)]).unwrap();
        assert_eq!(m.normalized[0], [0.0, 0.0]);
        assert_eq!(m.normalized[1], [0.5, 0.5]);
        assert!(Metrics::from_pairs([]).is_err());
    }

    #[test]
    fn report_renders() {
        let m = Metrics::from_pairs([(Fall, Fall), (Adl, Fall)]).unwrap();
        let text = m.to_string();
        assert!(text.contains("accuracy: 0.5000"));
        let json: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(json["counts"][1][0], 1);
    }
}
