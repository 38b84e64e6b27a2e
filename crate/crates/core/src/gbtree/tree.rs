use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{admissible, leaf_weight, split_gain, GradHess};
use super::params::Hyperparams;
use crate::data::FeatureMatrix;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

/// One node of a regression tree. Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        default_direction: Direction,
        /// Gain of this split, net of gamma.
        gain: f64,
        /// Training rows routed through this node.
        cover: f64,
    },
    Leaf {
        /// Margin contribution before shrinkage.
        leaf_weight: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }

    fn set_cover(&mut self, c: f64) {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover = c,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

/// Node arena in preorder; the root is node 0 and children follow their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(weight: f64) -> Tree {
        Tree { nodes: vec![Node::Leaf { leaf_weight: weight, cover: 0.0 }] }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] < *threshold { *left } else { *right }
                }
            }
        }
    }

    /// Raw (unshrunk) leaf weight reached by `row`.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { leaf_weight, .. } => *leaf_weight,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn total_gain(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Split { gain, .. } => *gain,
                Node::Leaf { .. } => 0.0,
            })
            .sum()
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }

    /// Recount node covers as the number of `matrix` rows reaching each node.
    pub fn recompute_covers(&mut self, matrix: &FeatureMatrix) {
        let mut counts = vec![0.0; self.nodes.len()];
        for row in matrix.rows() {
            let mut i = 0;
            loop {
                counts[i] += 1.0;
                match &self.nodes[i] {
                    Node::Leaf { .. } => break,
                    Node::Split { feature, threshold, left, right, .. } => {
                        i = if row[*feature] < *threshold { *left } else { *right }
                    }
                }
            }
        }
        for (n, c) in self.nodes.iter_mut().zip(counts) {
            n.set_cover(c);
        }
    }
}

/// Best split found for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub g_left: f64,
    pub h_left: f64,
    pub g_right: f64,
    pub h_right: f64,
}

fn best_split_for_column(
    rows: &[usize],
    feature: usize,
    grad_hess: &[GradHess],
    matrix: &FeatureMatrix,
    sum_g: f64,
    sum_h: f64,
    hp: &Hyperparams,
) -> Option<SplitCandidate> {
    let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&r| (matrix.get(r, feature), r)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best: Option<SplitCandidate> = None;
    let (mut g_left, mut h_left) = (0.0, 0.0);
    for k in 0..sorted.len().saturating_sub(1) {
        let gh = grad_hess[sorted[k].1];
        g_left += gh.g;
        h_left += gh.h;
        let (v, next) = (sorted[k].0, sorted[k + 1].0);
        if v == next {
            continue;
        }
        let (g_right, h_right) = (sum_g - g_left, sum_h - h_left);
        let gain = split_gain(g_left, h_left, g_right, h_right, hp);
        if !admissible(gain, h_left, h_right, hp) {
            continue;
        }
        if best.is_none_or(|b| gain > b.gain) {
            best =
                Some(SplitCandidate { feature, threshold: 0.5 * (v + next), gain, g_left, h_left, g_right, h_right });
        }
    }
    best
}

/// Exact greedy search over every midpoint of every candidate column.
/// `columns` must be ascending; ties keep the lower column, then the lower threshold.
pub fn find_best_split(
    rows: &[usize],
    columns: &[usize],
    grad_hess: &[GradHess],
    matrix: &FeatureMatrix,
    hp: &Hyperparams,
) -> Option<SplitCandidate> {
    let (sum_g, sum_h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grad_hess[r].g, h + grad_hess[r].h));
    let per_column: Vec<Option<SplitCandidate>> =
        columns.par_iter().map(|&f| best_split_for_column(rows, f, grad_hess, matrix, sum_g, sum_h, hp)).collect();
    // sequential reduction keeps tie-breaking independent of scheduling
    per_column.into_iter().flatten().fold(None, |best, c| match best {
        Some(b) if c.gain <= b.gain => Some(b),
        _ => Some(c),
    })
}

/// Grow one tree depth-first on the sampled `rows` and `columns`.
pub fn train_tree(
    rows: &[usize],
    columns: &[usize],
    grad_hess: &[GradHess],
    matrix: &FeatureMatrix,
    hp: &Hyperparams,
) -> Result<Tree> {
    let mut columns = columns.to_vec();
    columns.sort_unstable();
    columns.dedup();
    let mut nodes = Vec::new();
    grow(rows, &columns, grad_hess, matrix, hp, 0, &mut nodes)?;
    Ok(Tree { nodes })
}

fn grow(
    rows: &[usize],
    columns: &[usize],
    grad_hess: &[GradHess],
    matrix: &FeatureMatrix,
    hp: &Hyperparams,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> Result<usize> {
    let id = nodes.len();
    let cover = rows.len() as f64;
    let split = if depth < hp.max_depth && rows.len() >= 2 {
        find_best_split(rows, columns, grad_hess, matrix, hp)
    } else {
        None
    };
    match split {
        None => {
            let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grad_hess[r].g, h + grad_hess[r].h));
            nodes.push(Node::Leaf { leaf_weight: leaf_weight(g, h, hp)?, cover });
        }
        Some(s) => {
            nodes.push(Node::Leaf { leaf_weight: 0.0, cover });
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| matrix.get(r, s.feature) < s.threshold);
            let left = grow(&left_rows, columns, grad_hess, matrix, hp, depth + 1, nodes)?;
            let right = grow(&right_rows, columns, grad_hess, matrix, hp, depth + 1, nodes)?;
            nodes[id] = Node::Split {
                feature: s.feature,
                threshold: s.threshold,
                left,
                right,
                default_direction: Direction::Left,
                gain: s.gain,
                cover,
            };
        }
    }
    Ok(id)
}
