//! Versioned JSON model files. See `MODEL_FORMAT.md` at the repository root.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::{GBTModel, TrainingMeta};
use super::params::Hyperparams;
use super::tree::{Node, Tree};
use crate::data::Task;
use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "triage-gbt";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u64,
    task: Task,
    feature_names: Vec<String>,
    base_score: f64,
    hyperparams: Hyperparams,
    training_meta: TrainingMeta,
    trees: Vec<Tree>,
}

fn format_error(message: impl Into<String>) -> Error {
    Error::ModelFormat { message: message.into(), line: 0, column: 0 }
}

fn positioned(e: serde_json::Error) -> Error {
    Error::ModelFormat { message: e.to_string(), line: e.line(), column: e.column() }
}

pub fn to_json(model: &GBTModel) -> String {
    let file = ModelFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        task: model.task,
        feature_names: model.feature_names.clone(),
        base_score: model.hyperparams.base_score,
        hyperparams: model.hyperparams,
        training_meta: model.training_meta.clone(),
        trees: model.trees.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<GBTModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(positioned)?;
    match value.get("format").and_then(|v| v.as_str()) {
        Some(FORMAT_NAME) => {}
        Some(other) => return Err(format_error(format!("unknown format `{other}`"))),
        None => return Err(format_error("missing `format` tag")),
    }
    let version = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| format_error("missing `version`"))?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelVersion { found: version, supported: FORMAT_VERSION });
    }
    let file: ModelFile = serde_json::from_str(text).map_err(positioned)?;
    if file.base_score != file.hyperparams.base_score {
        return Err(format_error("base_score disagrees with hyperparams.base_score"));
    }
    file.hyperparams.validate()?;
    let d = file.feature_names.len();
    if file.training_meta.feature_ranges.len() != d {
        return Err(format_error("feature_ranges length differs from feature_names"));
    }
    for (t, tree) in file.trees.iter().enumerate() {
        validate_tree(tree, d).map_err(|m| format_error(format!("tree {t}: {m}")))?;
    }
    Ok(GBTModel {
        trees: file.trees,
        hyperparams: file.hyperparams,
        feature_names: file.feature_names,
        task: file.task,
        training_meta: file.training_meta,
    })
}

fn validate_tree(tree: &Tree, n_features: usize) -> std::result::Result<(), String> {
    if tree.nodes.is_empty() {
        return Err("no nodes".into());
    }
    let mut referenced = vec![false; tree.nodes.len()];
    for (i, node) in tree.nodes.iter().enumerate() {
        if let Node::Split { feature, threshold, left, right, .. } = node {
            if *feature >= n_features {
                return Err(format!("node {i} references feature {feature}"));
            }
            if !threshold.is_finite() {
                return Err(format!("node {i} has a non-finite threshold"));
            }
            for &c in [left, right] {
                // preorder layout: children come after their parent
                if c <= i || c >= tree.nodes.len() || referenced[c] {
                    return Err(format!("node {i} has invalid child {c}"));
                }
                referenced[c] = true;
            }
        }
    }
    if referenced.iter().skip(1).any(|r| !r) {
        return Err("unreachable nodes".into());
    }
    Ok(())
}

pub fn save_model(model: &GBTModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GBTModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
