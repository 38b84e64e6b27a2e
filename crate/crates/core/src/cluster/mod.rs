//! Unsupervised check of the severity data: Yeo-Johnson standardization then
//! k-prototypes clustering, compared against the outcome labels.

mod agreement;
mod kproto;
mod power;

use std::io::Write;

pub use agreement::{cluster_label_agreement, Agreement};
pub use kproto::{
    default_gamma_mix, dissimilarity, kprototypes, kprototypes_from, partition_cost, prototype_of, ClusterAssignment,
    KPrototypesConfig,
};
pub use power::{fit_column, log_likelihood, yeo_johnson, ColumnTransform, PowerTransform, LAMBDA_RANGE, LAMBDA_TOL};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub transform: PowerTransform,
    pub assignment: ClusterAssignment,
    pub agreement: Agreement,
}

/// Transform `ds`, cluster it with binary columns treated as categorical and
/// score the clusters against the task labels.
pub fn cluster_dataset(ds: &Dataset, cfg: &KPrototypesConfig) -> Result<ClusterRun> {
    let transform = PowerTransform::fit(&ds.matrix)?;
    let m = transform.transform(&ds.matrix)?;
    let categorical: Vec<bool> = (0..m.n_cols()).map(|j| ds.matrix.is_binary_column(j)).collect();
    let rows: Vec<Vec<f64>> = m.rows().map(<[f64]>::to_vec).collect();
    let assignment = kprototypes(&rows, &categorical, cfg)?;
    let agreement = cluster_label_agreement(&assignment.assignments, &ds.labels.labels, cfg.k)?;
    Ok(ClusterRun { transform, assignment, agreement })
}

fn io(e: std::io::Error) -> Error {
    Error::Csv(e.to_string())
}

fn header<W: Write>(w: &mut W, lines: &[String]) -> Result<()> {
    lines.iter().try_for_each(|l| writeln!(w, "# {l}").map_err(io))
}

pub fn write_assignments_csv<W: Write>(
    mut writer: W,
    ds: &Dataset,
    assignment: &ClusterAssignment,
    comments: &[String],
) -> Result<()> {
    header(&mut writer, comments)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_id", "cluster", "severity_label"])?;
    for (i, &c) in assignment.assignments.iter().enumerate() {
        w.write_record([i.to_string(), c.to_string(), ds.labels.labels[i].to_string()])?;
    }
    w.flush().map_err(io)
}

pub fn write_transform_csv<W: Write>(mut writer: W, transform: &PowerTransform, comments: &[String]) -> Result<()> {
    header(&mut writer, comments)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["column", "lambda", "mean", "sd"])?;
    for c in &transform.columns {
        w.write_record([c.column.clone(), format!("{:?}", c.lambda), format!("{:?}", c.mean), format!("{:?}", c.sd)])?;
    }
    w.flush().map_err(io)
}
