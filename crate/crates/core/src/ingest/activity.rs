use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two classes the detector separates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BinaryClass {
    Fall,
    Adl,
}

impl BinaryClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryClass::Fall => "FALL",
            BinaryClass::Adl => "ADL",
        }
    }

    /// Training target: FALL is the positive class.
    pub fn target(self) -> f64 {
        match self {
            BinaryClass::Fall => 1.0,
            BinaryClass::Adl => 0.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FALL" => Ok(BinaryClass::Fall),
            "ADL" => Ok(BinaryClass::Adl),
            other => Err(Error::Parse(format!("unknown class `{other}`"))),
        }
    }
}

impl fmt::Display for BinaryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An activity token from a dataset together with its binary class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActivityCode {
    pub code: String,
    pub class: BinaryClass,
}

const MOBIACT_FALLS: [&str; 4] = ["FOL", "FKL", "SDL", "BSC"];
const MOBIACT_ADLS: [&str; 9] = [
    "STD", "WAL", "JOG", "JUM", "STU", "STN", "SCH", "CSI", "CSO",
];

/// Maps activity tokens to binary classes.
///
/// The default vocabulary holds the 13 MobiAct codes. Other datasets add their
/// own codes with [`Vocabulary::with_extra`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    codes: BTreeMap<String, BinaryClass>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::mobiact()
    }
}

impl Vocabulary {
    pub fn mobiact() -> Self {
        let codes = MOBIACT_FALLS
            .iter()
            .map(|c| (c.to_string(), BinaryClass::Fall))
            .chain(
                MOBIACT_ADLS
                    .iter()
                    .map(|c| (c.to_string(), BinaryClass::Adl)),
            )
            .collect();
        Self { codes }
    }

    /// MobiAct codes plus the SisFall trial codes F01..F15 (falls) and
    /// D01..D19 (ADLs).
    pub fn with_sisfall(mut self) -> Self {
        for i in 1..=15 {
            self.codes.insert(format!("F{i:02}"), BinaryClass::Fall);
        }
        for i in 1..=19 {
            self.codes.insert(format!("D{i:02}"), BinaryClass::Adl);
        }
        self
    }

    pub fn with_extra(mut self, code: &str, class: BinaryClass) -> Self {
        self.codes.insert(code.trim().to_ascii_uppercase(), class);
        self
    }

    pub fn class_of(&self, token: &str) -> Result<BinaryClass> {
        let key = token.trim().to_ascii_uppercase();
        self.codes
            .get(&key)
            .copied()
            .ok_or(Error::UnknownActivity(key))
    }

    pub fn code(&self, token: &str) -> Result<ActivityCode> {
        let code = token.trim().to_ascii_uppercase();
        let class = self.class_of(&code)?;
        Ok(ActivityCode { code, class })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, BinaryClass)> {
        self.codes.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Class of a MobiAct activity token.
pub fn map_activity_to_class(token: &str) -> Result<BinaryClass> {
    Vocabulary::mobiact().class_of(token)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_codes() {
        assert_eq!(map_activity_to_class("FOL").unwrap(), BinaryClass::Fall);
        assert_eq!(map_activity_to_class("WAL").unwrap(), BinaryClass::Adl);
        assert!(matches!(
            map_activity_to_class("XYZ"),
            Err(Error::UnknownActivity(c)) if c == "XYZ"
        ));
    }

    #[test]
    fn mobiact_partition() {
        let v = Vocabulary::mobiact();
        assert_eq!(v.len(), 13);
        let falls = v.iter().filter(|(_, c)| *c == BinaryClass::Fall).count();
        assert_eq!(falls, 4);
        assert_eq!(v.len() - falls, 9);
    }

    #[test]
    fn sisfall_extras() {
        let v = Vocabulary::mobiact().with_sisfall();
        assert_eq!(v.class_of("F15").unwrap(), BinaryClass::Fall);
        assert_eq!(v.class_of("d01").unwrap(), BinaryClass::Adl);
        assert!(v.class_of("F16").is_err());
        let v = v.with_extra("XYZ", BinaryClass::Fall);
        assert_eq!(v.code("xyz").unwrap().class, BinaryClass::Fall);
    }
}
