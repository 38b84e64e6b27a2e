use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::confusion::{confusion, scalar_metrics, threshold_scores};
use super::curves::roc_auc;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gbtree::{train_ensemble, Hyperparams};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Probability cut-off for the accuracy and F-score of each fold.
    pub threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 5, repeats: 20, seed: 0, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldScore {
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub auc_roc: f64,
    /// `None` when the fold had no predicted and no actual positives.
    pub f_score: Option<f64>,
}

/// Mean with a normal-approximation 95% interval over fold scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn from_samples(xs: &[f64]) -> Interval {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd =
            if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Interval { mean, sd, lower: mean - 1.96 * sd, upper: mean + 1.96 * sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub config: CvConfig,
    pub scores: Vec<FoldScore>,
    pub accuracy: Interval,
    pub auc_roc: Interval,
    /// Undefined fold F-scores count as 0.
    pub f_score: Interval,
}

/// Fold index of every row for one repeat. Each label class is shuffled and
/// dealt round-robin, continuing the deal across classes so fold sizes stay
/// within one row of each other.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Metric(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = rng::stream(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < folds {
            return Err(Error::Metric(format!("class {class} has {} rows, fewer than {folds} folds", rows.len())));
        }
        rows.shuffle(&mut rng);
        for (k, &i) in rows.iter().enumerate() {
            assignment[i] = (offset + k) % folds;
        }
        offset = (offset + rows.len()) % folds;
    }
    Ok(assignment)
}

pub fn repeated_stratified_cv(ds: &Dataset, hp: &Hyperparams, cfg: &CvConfig) -> Result<CvReport> {
    hp.validate()?;
    if cfg.repeats == 0 {
        return Err(Error::Metric("repeats must be >= 1".into()));
    }
    let labels = &ds.labels.labels;
    let assignments = (0..cfg.repeats)
        .map(|r| stratified_folds(labels, cfg.folds, rng::derive_seed(cfg.seed, &format!("cv/folds/{r}"))))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.repeats).flat_map(|r| (0..cfg.folds).map(move |f| (r, f))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(r, f)| {
            let assign = &assignments[r];
            let held: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] == f).collect();
            let kept: Vec<usize> = (0..ds.len()).filter(|&i| assign[i] != f).collect();
            let seed = rng::derive_seed(cfg.seed, &format!("cv/fit/{r}/{f}"));
            let model = train_ensemble(&ds.select_rows(&kept), hp, seed)?;
            let test = ds.select_rows(&held);
            let proba = model.predict_proba_matrix(&test.matrix)?;
            let cm = confusion(&test.labels.labels, &threshold_scores(&proba, cfg.threshold))?;
            let m = scalar_metrics(&cm);
            Ok(FoldScore {
                repeat: r,
                fold: f,
                accuracy: m.accuracy.expect("non-empty fold"),
                auc_roc: roc_auc(&test.labels.labels, &proba)?,
                f_score: m.f_score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&FoldScore) -> f64| scores.iter().map(f).collect::<Vec<_>>();
    Ok(CvReport {
        config: *cfg,
        accuracy: Interval::from_samples(&col(|s| s.accuracy)),
        auc_roc: Interval::from_samples(&col(|s| s.auc_roc)),
        f_score: Interval::from_samples(&col(|s| s.f_score.unwrap_or(0.0))),
        scores,
    })
}
