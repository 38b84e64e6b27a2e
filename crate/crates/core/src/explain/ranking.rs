use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::treeshap::{ShapExplanation, TreeExplainer};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::gbtree::{GBTModel, Node, Tree};

/// Features sorted by mean |SHAP|, descending; equal values sort by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn new(mut entries: Vec<(String, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FeatureRanking { entries }
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Explain every row of `dataset` (in parallel, results in row order).
pub fn explain_rows(
    explainer: &TreeExplainer<'_>,
    model: &GBTModel,
    dataset: &FeatureMatrix,
) -> Result<Vec<ShapExplanation>> {
    let m = model.align(dataset)?;
    (0..m.n_rows()).into_par_iter().map(|i| explainer.explain(m.row(i))).collect()
}

pub fn ranking_from_explanations(model: &GBTModel, explanations: &[ShapExplanation]) -> Result<FeatureRanking> {
    if explanations.is_empty() {
        return Err(Error::Explain("cannot rank features over an empty dataset".into()));
    }
    let n = explanations.len() as f64;
    let entries = model
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let total: f64 = explanations.iter().map(|e| e.contributions[j].abs()).sum();
            (name.clone(), total / n)
        })
        .collect();
    Ok(FeatureRanking::new(entries))
}

/// Mean absolute SHAP value of each feature over `dataset`.
pub fn mean_abs_shap(model: &GBTModel, dataset: &FeatureMatrix, background: &FeatureMatrix) -> Result<FeatureRanking> {
    let explainer = TreeExplainer::from_background(model, background)?;
    let explanations = explain_rows(&explainer, model, dataset)?;
    ranking_from_explanations(model, &explanations)
}

pub fn top_k_features(ranking: &FeatureRanking, k: usize) -> Result<Vec<String>> {
    if k > ranking.len() {
        return Err(Error::Explain(format!("k = {k} exceeds the {} ranked features", ranking.len())));
    }
    Ok(ranking.entries[..k].iter().map(|(n, _)| n.clone()).collect())
}

/// One row per node of an exported tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeTableRow {
    pub node_id: usize,
    pub kind: &'static str,
    pub feature: Option<String>,
    pub threshold: Option<f64>,
    pub left_id: Option<usize>,
    pub right_id: Option<usize>,
    pub leaf_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeTree {
    pub index: usize,
    pub tree: Tree,
    pub total_gain: f64,
    pub table: Vec<TreeTableRow>,
}

pub fn tree_table(tree: &Tree, feature_names: &[String]) -> Vec<TreeTableRow> {
    tree.nodes
        .iter()
        .enumerate()
        .map(|(i, n)| match n {
            Node::Split { feature, threshold, left, right, .. } => TreeTableRow {
                node_id: i,
                kind: "split",
                feature: Some(feature_names[*feature].clone()),
                threshold: Some(*threshold),
                left_id: Some(*left),
                right_id: Some(*right),
                leaf_weight: None,
            },
            Node::Leaf { leaf_weight, .. } => TreeTableRow {
                node_id: i,
                kind: "leaf",
                feature: None,
                threshold: None,
                left_id: None,
                right_id: None,
                leaf_weight: Some(*leaf_weight),
            },
        })
        .collect()
}

/// The tree whose splits carry the largest summed gain (earliest on ties).
pub fn representative_tree(model: &GBTModel) -> Result<RepresentativeTree> {
    let (index, tree) = model
        .trees
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, &Tree)>, (i, t)| match best {
            Some((_, b)) if t.total_gain() <= b.total_gain() => best,
            _ => Some((i, t)),
        })
        .ok_or_else(|| Error::Explain("model has no trees".into()))?;
    Ok(RepresentativeTree {
        index,
        tree: tree.clone(),
        total_gain: tree.total_gain(),
        table: tree_table(tree, &model.feature_names),
    })
}
