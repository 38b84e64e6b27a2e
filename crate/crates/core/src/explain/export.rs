use std::io::Write;

use serde::Serialize;

use super::ranking::{FeatureRanking, TreeTableRow};
use super::treeshap::ShapExplanation;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}").map_err(|e| Error::Csv(e.to_string()))?;
    }
    Ok(())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Long-format table `(row_id, feature, feature_value, shap_value)`.
pub fn write_explanations_csv<W: Write>(
    mut writer: W,
    feature_names: &[String],
    data: &FeatureMatrix,
    explanations: &[ShapExplanation],
    comments: &[String],
) -> Result<()> {
    write_comments(&mut writer, comments)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_id", "feature", "feature_value", "shap_value"])?;
    for (i, e) in explanations.iter().enumerate() {
        for (j, name) in feature_names.iter().enumerate() {
            w.write_record([
                i.to_string(),
                name.clone(),
                format!("{:?}", data.get(i, j)),
                format!("{:?}", e.contributions[j]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct ExplanationMeta<'a> {
    pub space: &'static str,
    pub base_value: f64,
    pub n_rows: usize,
    pub task: &'a str,
    pub tool_version: &'a str,
    pub seed: u64,
    pub config_hash: &'a str,
}

pub fn explanation_meta_json(meta: &ExplanationMeta<'_>) -> String {
    serde_json::to_string_pretty(meta).expect("metadata serializes") + "\n"
}

pub fn write_ranking_csv<W: Write>(mut writer: W, ranking: &FeatureRanking, comments: &[String]) -> Result<()> {
    write_comments(&mut writer, comments)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "feature", "mean_abs_shap"])?;
    for (k, (name, v)) in ranking.entries.iter().enumerate() {
        w.write_record([(k + 1).to_string(), name.clone(), format!("{v:?}")])?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

/// Edge list `(node_id, kind, feature, threshold, left_id, right_id, leaf_weight)`.
pub fn write_tree_csv<W: Write>(mut writer: W, table: &[TreeTableRow], comments: &[String]) -> Result<()> {
    write_comments(&mut writer, comments)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node_id", "kind", "feature", "threshold", "left_id", "right_id", "leaf_weight"])?;
    for r in table {
        w.write_record([
            r.node_id.to_string(),
            r.kind.to_string(),
            r.feature.clone().unwrap_or_default(),
            r.threshold.map(|t| format!("{t:?}")).unwrap_or_default(),
            opt(&r.left_id),
            opt(&r.right_id),
            r.leaf_weight.map(|t| format!("{t:?}")).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
