use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/schema.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Demographic,
    Lab,
    Biomarker,
    Comorbidity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub unit: String,
    pub kind: FeatureKind,
}

/// Canonical feature list with units, in canonical column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub features: Vec<FeatureSpec>,
}

impl Schema {
    /// The schema shipped with the crate (`data/schema.txt`).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled schema.txt is well formed")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut features = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("schema line {}: expected 3 tab-separated fields", lineno + 1)));
            }
            let kind = match parts[2].trim() {
                "demographic" => FeatureKind::Demographic,
                "lab" => FeatureKind::Lab,
                "biomarker" => FeatureKind::Biomarker,
                "comorbidity" => FeatureKind::Comorbidity,
                other => return Err(Error::Config(format!("schema line {}: unknown kind `{other}`", lineno + 1))),
            };
            features.push(FeatureSpec { name: parts[0].trim().to_string(), unit: parts[1].trim().to_string(), kind });
        }
        Ok(Schema { features })
    }

    fn names_of(&self, pred: impl Fn(FeatureKind) -> bool) -> Vec<String> {
        self.features.iter().filter(|f| pred(f.kind)).map(|f| f.name.clone()).collect()
    }

    /// Numeric measurements read from CSV columns: routine labs then biomarkers.
    pub fn measurement_names(&self) -> Vec<String> {
        self.names_of(|k| matches!(k, FeatureKind::Lab | FeatureKind::Biomarker))
    }

    pub fn biomarker_names(&self) -> Vec<String> {
        self.names_of(|k| k == FeatureKind::Biomarker)
    }

    pub fn comorbidity_names(&self) -> Vec<String> {
        self.names_of(|k| k == FeatureKind::Comorbidity)
    }

    pub fn unit_of(&self, name: &str) -> Option<&str> {
        self.features.iter().find(|f| f.name.eq_ignore_ascii_case(name)).map(|f| f.unit.as_str())
    }

    /// Names of the core model inputs (everything except biomarkers).
    pub fn core_names(&self) -> Vec<String> {
        self.names_of(|k| k != FeatureKind::Biomarker)
    }
}
