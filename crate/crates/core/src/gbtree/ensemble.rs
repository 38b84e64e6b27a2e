use std::borrow::Cow;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::objective::{logistic_grad_hess, logit, sigmoid};
use super::params::Hyperparams;
use super::tree::{train_tree, Tree};
use crate::data::{Dataset, FeatureMatrix, Task};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    /// SHA-256 over column names, cell values and labels of the training set.
    pub data_fingerprint: String,
    pub n_rows: usize,
    /// Per-feature min/max seen in training, used for soft range warnings.
    pub feature_ranges: Vec<FeatureRange>,
    /// Optional wall-clock stamp; left empty so reruns stay byte-identical.
    #[serde(default)]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    /// Hash of the run configuration that produced the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// A trained boosted ensemble for one binary task.
#[derive(Debug, Clone, PartialEq)]
pub struct GBTModel {
    pub trees: Vec<Tree>,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub task: Task,
    pub training_meta: TrainingMeta,
}

pub fn fingerprint(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    for name in &ds.matrix.column_names {
        h.update(name.as_bytes());
        h.update([0u8]);
    }
    for row in ds.matrix.rows() {
        for v in row {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.update(&ds.labels.labels);
    hex::encode(h.finalize())
}

fn feature_ranges(m: &FeatureMatrix) -> Vec<FeatureRange> {
    (0..m.n_cols())
        .map(|j| {
            let col = m.column(j);
            FeatureRange {
                min: col.iter().copied().fold(f64::INFINITY, f64::min),
                max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Number of items kept when sampling `fraction` of `n`, never below one.
pub fn sample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).floor() as usize).clamp(1, n)
}

/// Rows and columns drawn for boosting round `tree_index`.
pub fn sample_round(
    n_rows: usize,
    n_cols: usize,
    hp: &Hyperparams,
    seed: u64,
    tree_index: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng::stream(rng::tree_seed(seed, tree_index));
    let rows = if hp.subsample >= 1.0 {
        (0..n_rows).collect()
    } else {
        let mut r = index::sample(&mut rng, n_rows, sample_size(n_rows, hp.subsample)).into_vec();
        r.sort_unstable();
        r
    };
    let cols = if hp.colsample_bytree >= 1.0 {
        (0..n_cols).collect()
    } else {
        let mut c = index::sample(&mut rng, n_cols, sample_size(n_cols, hp.colsample_bytree)).into_vec();
        c.sort_unstable();
        c
    };
    (rows, cols)
}

/// Newton boosting on the logistic loss. Deterministic given `(train, hp, seed)`.
pub fn train_ensemble(train: &Dataset, hp: &Hyperparams, seed: u64) -> Result<GBTModel> {
    hp.validate()?;
    let positives = train.labels.positives();
    if positives == 0 || positives == train.len() {
        return Err(Error::Training("labels contain a single class".into()));
    }
    let m = &train.matrix;
    let labels = &train.labels.labels;
    let mut margins = vec![logit(hp.base_score); m.n_rows()];
    let mut trees = Vec::with_capacity(hp.n_estimators);
    for t in 0..hp.n_estimators {
        let grad_hess: Vec<_> = margins.iter().zip(labels).map(|(&mg, &y)| logistic_grad_hess(mg, y)).collect();
        let (rows, cols) = sample_round(m.n_rows(), m.n_cols(), hp, seed, t);
        let mut tree = train_tree(&rows, &cols, &grad_hess, m, hp)?;
        tree.recompute_covers(m);
        for (i, margin) in margins.iter_mut().enumerate() {
            *margin += hp.learning_rate * tree.predict(m.row(i));
        }
        trees.push(tree);
    }
    Ok(GBTModel {
        trees,
        hyperparams: *hp,
        feature_names: m.column_names.clone(),
        task: train.labels.task,
        training_meta: TrainingMeta {
            seed,
            data_fingerprint: fingerprint(train),
            n_rows: m.n_rows(),
            feature_ranges: feature_ranges(m),
            timestamp: None,
            tool_version: None,
            config_hash: None,
        },
    })
}

impl GBTModel {
    pub fn base_margin(&self) -> f64 {
        logit(self.hyperparams.base_score)
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Shape { expected: self.n_features(), got: row.len() });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue(self.feature_names[j].clone()));
        }
        Ok(())
    }

    /// Margin without input validation; `row` must have the model's arity.
    pub fn margin_unchecked(&self, row: &[f64]) -> f64 {
        let eta = self.hyperparams.learning_rate;
        self.trees.iter().fold(self.base_margin(), |m, t| m + eta * t.predict(row))
    }

    pub fn predict_margin(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.margin_unchecked(row))
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        self.predict_margin(row).map(sigmoid)
    }

    /// Positive iff probability >= threshold.
    pub fn predict_label(&self, row: &[f64], threshold: f64) -> Result<u8> {
        self.predict_proba(row).map(|p| u8::from(p >= threshold))
    }

    /// The matrix restricted/reordered to this model's features.
    pub fn align<'a>(&self, m: &'a FeatureMatrix) -> Result<Cow<'a, FeatureMatrix>> {
        if m.column_names == self.feature_names {
            Ok(Cow::Borrowed(m))
        } else {
            m.select_columns(&self.feature_names).map(Cow::Owned)
        }
    }

    pub fn predict_proba_matrix(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        let m = self.align(m)?;
        Ok(m.rows().map(|r| sigmoid(self.margin_unchecked(r))).collect())
    }

    pub fn predict_margin_matrix(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        let m = self.align(m)?;
        Ok(m.rows().map(|r| self.margin_unchecked(r)).collect())
    }
}
