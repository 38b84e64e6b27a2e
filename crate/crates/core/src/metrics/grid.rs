use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{repeated_stratified_cv, CvConfig, CvReport};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gbtree::{train_ensemble, GBTModel, Hyperparams, PARAM_NAMES};
use crate::rng;

/// Candidate values per hyperparameter name.
pub type Grid = BTreeMap<String, Vec<f64>>;

/// Which cross-validated score picks the winning grid point first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Highest mean F-score, then highest mean accuracy.
    #[default]
    FScore,
    /// Highest mean accuracy, then highest mean F-score.
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    /// `(name, value)` in name order.
    pub params: Vec<(String, f64)>,
    pub mean_accuracy: Option<f64>,
    pub mean_f_score: Option<f64>,
    pub mean_auc_roc: Option<f64>,
    /// Set when cross-validation failed at this point.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best: Hyperparams,
    pub best_cv: CvReport,
    pub model: GBTModel,
    /// Every grid point, in enumeration order.
    pub table: Vec<GridPoint>,
}

/// One grid point: `(name, value)` overrides and the resulting settings.
pub type GridCandidate = (Vec<(String, f64)>, Hyperparams);

/// Exhaustive Cartesian product over `grid`, applied on top of `base`.
pub fn expand_grid(grid: &Grid, base: &Hyperparams) -> Result<Vec<GridCandidate>> {
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err(Error::Config("grid must name at least one value per parameter".into()));
    }
    if let Some(bad) = grid.keys().find(|k| !PARAM_NAMES.contains(&k.as_str())) {
        return Err(Error::Hyperparam { name: bad.clone(), message: "unknown hyperparameter".into() });
    }
    let mut points: Vec<Vec<(String, f64)>> = vec![vec![]];
    for (name, values) in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((name.clone(), v));
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .map(|p| {
            let mut hp = *base;
            for (name, v) in &p {
                hp.set(name, *v)?;
            }
            Ok((p, hp))
        })
        .collect()
}

fn lexicographic(a: &[(String, f64)], b: &[(String, f64)]) -> Ordering {
    a.iter().zip(b).map(|((_, x), (_, y))| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// `Less` when `a` should win over `b`.
fn rank(rule: SelectionRule, a: &GridPoint, b: &GridPoint) -> Ordering {
    let (acc_a, f_a) = (a.mean_accuracy.unwrap_or(f64::NEG_INFINITY), a.mean_f_score.unwrap_or(f64::NEG_INFINITY));
    let (acc_b, f_b) = (b.mean_accuracy.unwrap_or(f64::NEG_INFINITY), b.mean_f_score.unwrap_or(f64::NEG_INFINITY));
    let primary = match rule {
        SelectionRule::FScore => f_b.total_cmp(&f_a).then(acc_b.total_cmp(&acc_a)),
        SelectionRule::Accuracy => acc_b.total_cmp(&acc_a).then(f_b.total_cmp(&f_a)),
    };
    primary.then_with(|| lexicographic(&a.params, &b.params))
}

pub fn grid_search(
    ds: &Dataset,
    grid: &Grid,
    base: &Hyperparams,
    cv: &CvConfig,
    rule: SelectionRule,
) -> Result<GridSearchResult> {
    let points = expand_grid(grid, base)?;
    let outcomes: Vec<(GridPoint, Option<(Hyperparams, CvReport)>)> = points
        .into_par_iter()
        .map(|(params, hp)| match hp.validate().and_then(|_| repeated_stratified_cv(ds, &hp, cv)) {
            Ok(rep) => (
                GridPoint {
                    params,
                    mean_accuracy: Some(rep.accuracy.mean),
                    mean_f_score: Some(rep.f_score.mean),
                    mean_auc_roc: Some(rep.auc_roc.mean),
                    error: None,
                },
                Some((hp, rep)),
            ),
            Err(e) => (
                GridPoint {
                    params,
                    mean_accuracy: None,
                    mean_f_score: None,
                    mean_auc_roc: None,
                    error: Some(e.to_string()),
                },
                None,
            ),
        })
        .collect();
    let winner = outcomes
        .iter()
        .filter(|(_, ok)| ok.is_some())
        .min_by(|a, b| rank(rule, &a.0, &b.0))
        .ok_or_else(|| Error::Training("every grid point failed".into()))?;
    let (best, best_cv) = winner.1.clone().expect("filtered");
    let model = train_ensemble(ds, &best, rng::derive_seed(cv.seed, "grid/refit"))?;
    Ok(GridSearchResult { best, best_cv, model, table: outcomes.into_iter().map(|(p, _)| p).collect() })
}

/// Parse a grid file: TOML tables of `name = [values]`.
pub fn parse_grid(text: &str) -> Result<Grid> {
    #[derive(Deserialize)]
    struct GridFile {
        grid: BTreeMap<String, Vec<toml::Value>>,
    }
    let file: GridFile = toml::from_str(text).map_err(|e| Error::Config(format!("grid file: {e}")))?;
    file.grid
        .into_iter()
        .map(|(k, vs)| {
            let values = vs
                .into_iter()
                .map(|v| match v {
                    toml::Value::Integer(i) => Ok(i as f64),
                    toml::Value::Float(f) => Ok(f),
                    other => Err(Error::Config(format!("grid value for `{k}` is not a number: {other}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((k, values))
        })
        .collect()
}
