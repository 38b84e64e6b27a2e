//! Exact path-dependent TreeSHAP in margin (log-odds) space.
//!
//! Features outside the coalition are marginalized by following both children
//! of a split, weighted by the share of background rows that went each way.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::gbtree::{GBTModel, Node, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct ShapExplanation {
    /// Expected margin over the background data.
    pub base_value: f64,
    /// One attribution per model feature, in model column order.
    pub contributions: Vec<f64>,
    pub predicted_margin: f64,
}

impl ShapExplanation {
    /// `predicted_margin - (base_value + sum(contributions))`.
    pub fn additivity_error(&self) -> f64 {
        self.predicted_margin - (self.base_value + self.contributions.iter().sum::<f64>())
    }
}

/// Fraction of a node's background mass that goes to `child`. A node that no
/// background row reached splits its (zero) mass evenly.
pub fn child_fraction(covers: &[f64], node: usize, child: usize) -> f64 {
    let parent = covers[node];
    if parent > 0.0 {
        covers[child] / parent
    } else {
        0.5
    }
}

/// Background covers attached to a model, one vector per tree.
#[derive(Debug, Clone)]
pub struct TreeExplainer<'m> {
    model: &'m GBTModel,
    covers: Vec<Vec<f64>>,
    base_value: f64,
}

impl<'m> TreeExplainer<'m> {
    /// Use the training-set covers stored in the model file.
    pub fn from_model(model: &'m GBTModel) -> Result<Self> {
        let covers: Vec<Vec<f64>> = model.trees.iter().map(|t| t.nodes.iter().map(Node::cover).collect()).collect();
        if covers.iter().any(|c| c[0] <= 0.0) {
            return Err(Error::Explain("model carries no background covers".into()));
        }
        Ok(Self::with_covers(model, covers))
    }

    /// Route `background` through every tree to obtain the covers.
    pub fn from_background(model: &'m GBTModel, background: &FeatureMatrix) -> Result<Self> {
        let background = model.align(background)?;
        if background.n_rows() == 0 {
            return Err(Error::Explain("empty background".into()));
        }
        let covers = model
            .trees
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.recompute_covers(&background);
                t.nodes.iter().map(Node::cover).collect()
            })
            .collect();
        Ok(Self::with_covers(model, covers))
    }

    fn with_covers(model: &'m GBTModel, covers: Vec<Vec<f64>>) -> Self {
        let eta = model.hyperparams.learning_rate;
        let base_value =
            model.trees.iter().zip(&covers).fold(model.base_margin(), |acc, (t, c)| acc + eta * expected_value(t, c));
        TreeExplainer { model, covers, base_value }
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn covers(&self) -> &[Vec<f64>] {
        &self.covers
    }

    pub fn explain(&self, row: &[f64]) -> Result<ShapExplanation> {
        let predicted_margin = self.model.predict_margin(row)?;
        let eta = self.model.hyperparams.learning_rate;
        let mut contributions = vec![0.0; self.model.n_features()];
        let mut phi = vec![0.0; self.model.n_features()];
        for (tree, covers) in self.model.trees.iter().zip(&self.covers) {
            phi.iter_mut().for_each(|p| *p = 0.0);
            tree_shap_single(tree, covers, row, &mut phi);
            for (c, p) in contributions.iter_mut().zip(&phi) {
                *c += eta * p;
            }
        }
        Ok(ShapExplanation { base_value: self.base_value, contributions, predicted_margin })
    }
}

/// SHAP values of `row` for the ensemble, with covers from `background`.
pub fn tree_shap(model: &GBTModel, row: &[f64], background: &FeatureMatrix) -> Result<ShapExplanation> {
    TreeExplainer::from_background(model, background)?.explain(row)
}

/// Cover-weighted mean leaf value of one tree (unshrunk).
pub fn expected_value(tree: &Tree, covers: &[f64]) -> f64 {
    fn go(tree: &Tree, covers: &[f64], i: usize) -> f64 {
        match &tree.nodes[i] {
            Node::Leaf { leaf_weight, .. } => *leaf_weight,
            Node::Split { left, right, .. } => {
                child_fraction(covers, i, *left) * go(tree, covers, *left)
                    + child_fraction(covers, i, *right) * go(tree, covers, *right)
            }
        }
    }
    go(tree, covers, 0)
}

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

fn extend_path(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElement { feature, zero_fraction, one_fraction, pweight: if depth == 0 { 1.0 } else { 0.0 } });
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 / d1;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 / d1;
    }
}

fn unwind_path(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one_portion = path[depth].pweight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one_portion * d1 / ((i + 1) as f64 * one);
            next_one_portion = tmp - path[i].pweight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].pweight = path[i].pweight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

fn unwound_path_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one_portion = path[depth].pweight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next_one_portion * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next_one_portion = path[i].pweight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].pweight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

/// Adds the unshrunk SHAP values of one tree into `phi`.
pub fn tree_shap_single(tree: &Tree, covers: &[f64], row: &[f64], phi: &mut [f64]) {
    let path = Vec::with_capacity(tree.depth() + 2);
    recurse(tree, covers, row, phi, 0, &path, 1.0, 1.0, None);
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &Tree,
    covers: &[f64],
    row: &[f64],
    phi: &mut [f64],
    node: usize,
    parent_path: &[PathElement],
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    let mut path = parent_path.to_vec();
    extend_path(&mut path, zero_fraction, one_fraction, feature);
    match &tree.nodes[node] {
        Node::Leaf { leaf_weight, .. } => {
            for i in 1..path.len() {
                let w = unwound_path_sum(&path, i);
                let el = path[i];
                if let Some(f) = el.feature {
                    phi[f] += w * (el.one_fraction - el.zero_fraction) * leaf_weight;
                }
            }
        }
        Node::Split { feature: split, threshold, left, right, .. } => {
            let (hot, cold) = if row[*split] < *threshold { (*left, *right) } else { (*right, *left) };
            let mut incoming_zero = 1.0;
            let mut incoming_one = 1.0;
            if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(*split)) {
                incoming_zero = path[k].zero_fraction;
                incoming_one = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            let hot_zero = incoming_zero * child_fraction(covers, node, hot);
            let cold_zero = incoming_zero * child_fraction(covers, node, cold);
            // a branch with both fractions zero carries no weight anywhere below
            if hot_zero != 0.0 || incoming_one != 0.0 {
                recurse(tree, covers, row, phi, hot, &path, hot_zero, incoming_one, Some(*split));
            }
            if cold_zero != 0.0 {
                recurse(tree, covers, row, phi, cold, &path, cold_zero, 0.0, Some(*split));
            }
        }
    }
}
