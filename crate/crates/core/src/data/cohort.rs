use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::Schema;
use crate::error::{Error, Result};

/// Clinical outcome category, in severity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Mild,
    Moderate,
    Severe,
    Dead,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [Stratum::Mild, Stratum::Moderate, Stratum::Severe, Stratum::Dead];

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Mild => "mild",
            Stratum::Moderate => "moderate",
            Stratum::Severe => "severe",
            Stratum::Dead => "dead",
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stratum {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mild" => Ok(Stratum::Mild),
            "moderate" => Ok(Stratum::Moderate),
            "severe" => Ok(Stratum::Severe),
            "dead" | "deceased" => Ok(Stratum::Dead),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    /// Years; `None` when the cell was missing or unparseable.
    pub age: Option<u32>,
    /// Raw gender cell; mapped to 0/1 by `encode`.
    pub gender: String,
    pub outcome: Stratum,
    /// Present measurements only; an absent key is a missing value.
    pub labs: BTreeMap<String, f64>,
    pub symptoms: BTreeSet<String>,
    pub comorbidities: BTreeSet<String>,
}

impl PatientRecord {
    /// Value of a manifest feature that can be missing (age or a measurement).
    pub fn measured(&self, feature: &str) -> Option<f64> {
        if feature == AGE {
            self.age.map(f64::from)
        } else {
            self.labs.get(feature).copied()
        }
    }
}

pub const AGE: &str = "Age";
pub const GENDER: &str = "Gender";

const COL_ID: &str = "patient_id";
const COL_AGE: &str = "age";
const COL_GENDER: &str = "gender";
const COL_OUTCOME: &str = "outcome";
const COL_COMORBIDITIES: &str = "comorbidities";
const COL_SYMPTOMS: &str = "symptoms";

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub records: Vec<PatientRecord>,
    /// Canonical column order: Age, Gender, measurements, comorbidity flags.
    pub feature_manifest: Vec<String>,
    /// Comorbidity categories known to this cohort, in canonical order.
    pub comorbidity_levels: Vec<String>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Manifest entries that may carry missing values.
    pub fn measured_features(&self) -> Vec<String> {
        self.feature_manifest
            .iter()
            .filter(|f| f.as_str() != GENDER && !self.comorbidity_levels.contains(f))
            .cloned()
            .collect()
    }

    pub fn count_by_stratum(&self) -> BTreeMap<Stratum, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.outcome).or_insert(0) += 1;
        }
        counts
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let measurements: Vec<&String> = self
            .feature_manifest
            .iter()
            .filter(|f| f.as_str() != AGE && f.as_str() != GENDER && !self.comorbidity_levels.contains(f))
            .collect();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![COL_ID, COL_AGE, COL_GENDER, COL_OUTCOME];
        header.extend(measurements.iter().map(|s| s.as_str()));
        header.push(COL_COMORBIDITIES);
        header.push(COL_SYMPTOMS);
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.patient_id.clone(),
                r.age.map(|a| a.to_string()).unwrap_or_else(|| "NA".into()),
                r.gender.clone(),
                r.outcome.to_string(),
            ];
            for m in &measurements {
                row.push(match r.labs.get(m.as_str()) {
                    Some(v) => format!("{v}"),
                    None => "NA".into(),
                });
            }
            row.push(r.comorbidities.iter().cloned().collect::<Vec<_>>().join(";"));
            row.push(r.symptoms.iter().cloned().collect::<Vec<_>>().join(";"));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Whether a raw cell denotes a missing value: empty, `NA`, `NaN` or `-`.
pub fn is_missing_token(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "-" || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

fn parse_measurement(cell: &str) -> Option<f64> {
    if is_missing_token(cell) {
        return None;
    }
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn split_set(cell: &str) -> BTreeSet<String> {
    cell.split(';').map(|s| s.trim().to_ascii_lowercase()).filter(|s| !s.is_empty() && !is_missing_token(s)).collect()
}

/// Read a cohort CSV from disk. See [`read_cohort`].
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Cohort> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_cohort(file, schema)
}

/// Parse a cohort CSV. The header must contain `age`, `gender`, `outcome`
/// and every schema measurement column; unparseable numeric cells become
/// missing values.
pub fn read_cohort<R: Read>(reader: R, schema: &Schema) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let find = |name: &str| header.iter().position(|h| h == &name.trim().to_ascii_lowercase());

    let measurements = schema.measurement_names();
    let mut missing = Vec::new();
    for required in [COL_AGE, COL_GENDER, COL_OUTCOME] {
        if find(required).is_none() {
            missing.push(required.to_string());
        }
    }
    for m in &measurements {
        if find(m).is_none() {
            missing.push(m.clone());
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema { missing });
    }
    let age_col = find(COL_AGE).unwrap();
    let gender_col = find(COL_GENDER).unwrap();
    let outcome_col = find(COL_OUTCOME).unwrap();
    let id_col = find(COL_ID);
    let comorb_col = find(COL_COMORBIDITIES);
    let symptom_col = find(COL_SYMPTOMS);
    let measurement_cols: Vec<(String, usize)> = measurements.iter().map(|m| (m.clone(), find(m).unwrap())).collect();

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let cell = |c: usize| row.get(c).unwrap_or("");
        let outcome = cell(outcome_col)
            .parse::<Stratum>()
            .map_err(|level| Error::Record { row: i + 1, message: format!("unknown outcome `{level}`") })?;
        let age = parse_measurement(cell(age_col)).filter(|a| *a >= 0.0).map(|a| a.round() as u32);
        let labs = measurement_cols
            .iter()
            .filter_map(|(name, c)| parse_measurement(cell(*c)).map(|v| (name.clone(), v)))
            .collect();
        records.push(PatientRecord {
            patient_id: id_col.map(|c| cell(c).to_string()).unwrap_or_else(|| format!("row{}", i + 1)),
            age,
            gender: cell(gender_col).to_string(),
            outcome,
            labs,
            symptoms: symptom_col.map(|c| split_set(cell(c))).unwrap_or_default(),
            comorbidities: comorb_col.map(|c| split_set(cell(c))).unwrap_or_default(),
        });
    }

    let comorbidity_levels = schema.comorbidity_names();
    let mut feature_manifest = vec![AGE.to_string(), GENDER.to_string()];
    feature_manifest.extend(measurements);
    feature_manifest.extend(comorbidity_levels.iter().cloned());
    Ok(Cohort { records, feature_manifest, comorbidity_levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_schema() -> Schema {
        Schema::parse(
            "Age\tyears\tdemographic\nGender\t0/1\tdemographic\nUrea\tmg/dL\tlab\ndiabetes\t0/1\tcomorbidity\n",
        )
        .unwrap()
    }

    #[test]
    fn parses_rows_and_missing_tokens() {
        let csv = "patient_id,Age,GENDER,outcome, urea ,comorbidities\n\
                   p1,40,M,mild,20.5,diabetes\n\
                   p2,55,F,dead,NA,\n\
                   p3,61,M,Severe,abc,\n";
        let c = read_cohort(csv.as_bytes(), &tiny_schema()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.records[0].labs.get("Urea"), Some(&20.5));
        assert!(!c.records[1].labs.contains_key("Urea"));
        assert!(!c.records[2].labs.contains_key("Urea"));
        assert_eq!(c.records[2].outcome, Stratum::Severe);
        assert!(c.records[0].comorbidities.contains("diabetes"));
        assert_eq!(c.feature_manifest, ["Age", "Gender", "Urea", "diabetes"]);
    }

    #[test]
    fn missing_outcome_column_is_a_schema_error() {
        let csv = "age,gender,urea\n40,M,1\n";
        match read_cohort(csv.as_bytes(), &tiny_schema()) {
            Err(Error::Schema { missing }) => assert_eq!(missing, ["outcome"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv(Path::new("/nonexistent/cohort.csv"), &tiny_schema()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn missing_tokens() {
        for t in ["", " ", "NA", "na", "NaN", "nan", "-"] {
            assert!(is_missing_token(t), "{t:?}");
        }
        assert!(!is_missing_token("0"));
    }

    #[test]
    fn csv_round_trip() {
        let csv = "patient_id,age,gender,outcome,urea,comorbidities,symptoms\n\
                   p1,40,M,mild,20.5,diabetes,fever;cough\n\
                   p2,NA,F,dead,NA,,\n";
        let c = read_cohort(csv.as_bytes(), &tiny_schema()).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = read_cohort(buf.as_slice(), &tiny_schema()).unwrap();
        assert_eq!(c, back);
    }
}
