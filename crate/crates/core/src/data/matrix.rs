use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cohort::{Cohort, Stratum, GENDER};
use crate::error::{Error, Result};

/// Dense row-major design matrix with a stratum tag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    pub column_names: Vec<String>,
    pub strata: Vec<Stratum>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, column_names: Vec<String>, strata: Vec<Stratum>) -> Result<Self> {
        let d = column_names.len();
        let n = strata.len();
        if n == 0 || d == 0 {
            return Err(Error::EmptyOutput("feature matrix needs at least one row and column".into()));
        }
        if values.len() != n * d {
            return Err(Error::Shape { expected: n * d, got: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue(column_names[pos % d].clone()));
        }
        Ok(FeatureMatrix { values, n_rows: n, column_names, strata })
    }

    /// Matrix from rows of equal length; strata default to `Mild` when omitted.
    pub fn from_rows(rows: &[Vec<f64>], column_names: Vec<String>, strata: Option<Vec<Stratum>>) -> Result<Self> {
        let d = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::Shape { expected: d, got: r.len() });
            }
            values.extend_from_slice(r);
        }
        let strata = strata.unwrap_or_else(|| vec![Stratum::Mild; rows.len()]);
        Self::new(values, column_names, strata)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Columns whose values all lie in {0, 1}.
    pub fn is_binary_column(&self, j: usize) -> bool {
        (0..self.n_rows).all(|i| {
            let v = self.get(i, j);
            v == 0.0 || v == 1.0
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values,
            n_rows: idx.len(),
            column_names: self.column_names.clone(),
            strata: idx.iter().map(|&i| self.strata[i]).collect(),
        }
    }

    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::Schema { missing: vec![n.clone()] }))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.n_rows * idx.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        FeatureMatrix::new(values, names.to_vec(), self.strata.clone())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Mortality,
    Severity,
}

impl Task {
    pub fn is_positive(self, s: Stratum) -> bool {
        match self {
            Task::Mortality => s == Stratum::Dead,
            Task::Severity => matches!(s, Stratum::Severe | Stratum::Dead),
        }
    }

    pub fn positive_class_name(self) -> &'static str {
        match self {
            Task::Mortality => "dead",
            Task::Severity => "severe",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Mortality => "mortality",
            Task::Severity => "severity",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mortality" => Ok(Task::Mortality),
            "severity" => Ok(Task::Severity),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub labels: Vec<u8>,
    pub task: Task,
    pub positive_class_name: String,
}

impl LabelVector {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn select(&self, idx: &[usize]) -> LabelVector {
        LabelVector {
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            task: self.task,
            positive_class_name: self.positive_class_name.clone(),
        }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }
}

/// Features and labels that travel together.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: FeatureMatrix,
    pub labels: LabelVector,
}

impl Dataset {
    pub fn new(matrix: FeatureMatrix, task: Task) -> Self {
        let labels = derive_labels(&matrix, task);
        Dataset { matrix, labels }
    }

    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.n_rows() == 0
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset { matrix: self.matrix.select_rows(idx), labels: self.labels.select(idx) }
    }

    pub fn select_columns(&self, names: &[String]) -> Result<Dataset> {
        Ok(Dataset { matrix: self.matrix.select_columns(names)?, labels: self.labels.clone() })
    }

    /// Write as CSV: `#`-prefixed comment lines, then feature columns plus
    /// `stratum` and `label`.
    pub fn write_csv<W: Write>(&self, mut writer: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(writer, "# {c}").map_err(|e| Error::Csv(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.matrix.column_names.iter().map(|s| s.as_str()).collect();
        header.push("stratum");
        header.push("label");
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.matrix.row(i).iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.matrix.strata[i].to_string());
            rec.push(self.labels.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), comments)
    }

    /// Read a prepared dataset; labels are re-derived from the stratum column.
    pub fn read_csv<R: Read>(reader: R, task: Task) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let stratum_col = header
            .iter()
            .position(|h| h == "stratum")
            .ok_or_else(|| Error::Schema { missing: vec!["stratum".into()] })?;
        let feature_cols: Vec<usize> =
            (0..header.len()).filter(|&j| header[j] != "stratum" && header[j] != "label").collect();
        let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
        let mut values = Vec::new();
        let mut strata = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for &j in &feature_cols {
                let cell = rec.get(j).unwrap_or("");
                let v: f64 = cell.parse().map_err(|_| Error::Record {
                    row: i + 1,
                    message: format!("non-numeric value `{cell}` in column `{}`", header[j]),
                })?;
                values.push(v);
            }
            let s = rec.get(stratum_col).unwrap_or("");
            strata.push(
                s.parse::<Stratum>()
                    .map_err(|level| Error::Record { row: i + 1, message: format!("unknown stratum `{level}`") })?,
            );
        }
        let matrix = FeatureMatrix::new(values, names, strata)?;
        Ok(Dataset::new(matrix, task))
    }

    pub fn load_csv(path: &Path, task: Task) -> Result<Dataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), task)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Emit one 0/1 column per observed symptom (off by default).
    pub include_symptoms: bool,
}

pub const SYMPTOM_PREFIX: &str = "symptom:";

fn encode_gender(raw: &str) -> Result<f64> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "m" | "male" | "0" => Ok(0.0),
        "f" | "female" | "1" => Ok(1.0),
        other => Err(Error::Encoding { column: GENDER.into(), level: other.to_string() }),
    }
}

/// Turn a cleaned cohort into a numeric matrix following the manifest order:
/// gender becomes 0 (M) / 1 (F), each comorbidity a 0/1 column, labs copied.
pub fn encode(cohort: &Cohort, options: EncodeOptions) -> Result<FeatureMatrix> {
    let symptoms: Vec<String> = if options.include_symptoms {
        let all: BTreeSet<&String> = cohort.records.iter().flat_map(|r| r.symptoms.iter()).collect();
        all.into_iter().cloned().collect()
    } else {
        Vec::new()
    };
    let mut column_names = cohort.feature_manifest.clone();
    column_names.extend(symptoms.iter().map(|s| format!("{SYMPTOM_PREFIX}{s}")));
    let levels: Vec<String> = cohort.comorbidity_levels.iter().map(|c| c.to_ascii_lowercase()).collect();

    let mut values = Vec::with_capacity(cohort.len() * column_names.len());
    for r in &cohort.records {
        if let Some(unknown) = r.comorbidities.iter().find(|c| !levels.contains(c)) {
            return Err(Error::Encoding { column: "comorbidities".into(), level: unknown.clone() });
        }
        for f in &cohort.feature_manifest {
            let v = if f == GENDER {
                encode_gender(&r.gender)?
            } else if let Some(k) = cohort.comorbidity_levels.iter().position(|c| c == f) {
                if r.comorbidities.contains(&levels[k]) {
                    1.0
                } else {
                    0.0
                }
            } else {
                r.measured(f).ok_or_else(|| Error::MissingValue(f.clone()))?
            };
            values.push(v);
        }
        for s in &symptoms {
            values.push(if r.symptoms.contains(s) { 1.0 } else { 0.0 });
        }
    }
    let strata = cohort.records.iter().map(|r| r.outcome).collect();
    FeatureMatrix::new(values, column_names, strata)
}

/// Binary labels from strata: mortality positive = dead, severity positive = severe or dead.
pub fn derive_labels(matrix: &FeatureMatrix, task: Task) -> LabelVector {
    LabelVector {
        labels: matrix.strata.iter().map(|&s| u8::from(task.is_positive(s))).collect(),
        task,
        positive_class_name: task.positive_class_name().to_string(),
    }
}
