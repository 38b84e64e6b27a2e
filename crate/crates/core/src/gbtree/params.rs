use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Booster configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// L1 penalty on leaf weights.
    pub alpha: f64,
    /// Minimum gain required to keep a split.
    pub gamma: f64,
    pub n_estimators: usize,
    /// Minimum hessian mass in each child.
    pub min_child_weight: f64,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
    /// Fraction of columns drawn for each tree.
    pub colsample_bytree: f64,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Prior probability the margin starts from.
    pub base_score: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.0,
            gamma: 0.0,
            n_estimators: 100,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            learning_rate: 0.3,
            max_depth: 6,
            lambda: 1.0,
            base_score: 0.5,
        }
    }
}

pub const PARAM_NAMES: [&str; 10] = [
    "alpha",
    "base_score",
    "colsample_bytree",
    "gamma",
    "lambda",
    "learning_rate",
    "max_depth",
    "min_child_weight",
    "n_estimators",
    "subsample",
];

impl Hyperparams {
    /// Tuned configuration of the mortality model.
    pub fn mortality_preset() -> Self {
        Hyperparams {
            alpha: 0.9,
            gamma: 0.8,
            n_estimators: 100,
            min_child_weight: 2.0,
            subsample: 1.0,
            colsample_bytree: 0.7,
            learning_rate: 0.148,
            max_depth: 4,
            ..Default::default()
        }
    }

    /// Tuned configuration of the severity model.
    pub fn severity_preset() -> Self {
        Hyperparams {
            alpha: 0.1,
            gamma: 3.0,
            n_estimators: 100,
            min_child_weight: 1.0,
            subsample: 0.3,
            colsample_bytree: 1.0,
            learning_rate: 0.3,
            max_depth: 6,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, message: &str| Err(Error::Hyperparam { name: name.into(), message: message.into() });
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let unit = |v: f64| v.is_finite() && v > 0.0 && v <= 1.0;
        if !nonneg(self.alpha) {
            return bad("alpha", "must be >= 0");
        }
        if !nonneg(self.gamma) {
            return bad("gamma", "must be >= 0");
        }
        if self.n_estimators < 1 {
            return bad("n_estimators", "must be >= 1");
        }
        if !nonneg(self.min_child_weight) {
            return bad("min_child_weight", "must be >= 0");
        }
        if !unit(self.subsample) {
            return bad("subsample", "must lie in (0, 1]");
        }
        if !unit(self.colsample_bytree) {
            return bad("colsample_bytree", "must lie in (0, 1]");
        }
        if !unit(self.learning_rate) {
            return bad("learning_rate", "must lie in (0, 1]");
        }
        if self.max_depth < 1 {
            return bad("max_depth", "must be >= 1");
        }
        if !nonneg(self.lambda) {
            return bad("lambda", "must be >= 0");
        }
        if !(self.base_score > 0.0 && self.base_score < 1.0) {
            return bad("base_score", "must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "alpha" => self.alpha,
            "gamma" => self.gamma,
            "n_estimators" => self.n_estimators as f64,
            "min_child_weight" => self.min_child_weight,
            "subsample" => self.subsample,
            "colsample_bytree" => self.colsample_bytree,
            "learning_rate" => self.learning_rate,
            "max_depth" => self.max_depth as f64,
            "lambda" => self.lambda,
            "base_score" => self.base_score,
            _ => return None,
        })
    }

    /// Set a parameter by name; integer parameters must receive whole numbers.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let whole = |v: f64| -> Result<usize> {
            if v.fract() == 0.0 && v >= 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Hyperparam { name: name.into(), message: format!("expects an integer, got {v}") })
            }
        };
        match name {
            "alpha" => self.alpha = value,
            "gamma" => self.gamma = value,
            "n_estimators" => self.n_estimators = whole(value)?,
            "min_child_weight" => self.min_child_weight = value,
            "subsample" => self.subsample = value,
            "colsample_bytree" => self.colsample_bytree = value,
            "learning_rate" => self.learning_rate = value,
            "max_depth" => self.max_depth = whole(value)?,
            "lambda" => self.lambda = value,
            "base_score" => self.base_score = value,
            _ => return Err(Error::Hyperparam { name: name.into(), message: "unknown hyperparameter".into() }),
        }
        Ok(())
    }
}
