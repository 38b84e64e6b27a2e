//! Logistic objective and the second-order leaf/gain formulas.

use super::params::Hyperparams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradHess {
    pub g: f64,
    pub h: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Gradient and hessian of the logistic loss with respect to the raw margin.
pub fn logistic_grad_hess(raw_margin: f64, label: u8) -> GradHess {
    let p = sigmoid(raw_margin);
    GradHess { g: p - f64::from(label), h: p * (1.0 - p) }
}

/// Mean negative log-likelihood of labels under the given margins.
pub fn mean_logloss(margins: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(&m, &y)| {
            // log(1 + e^m) - y*m, computed without overflow
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - f64::from(y) * m
        })
        .sum();
    total / margins.len() as f64
}

pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// Optimal leaf weight `-soft_threshold(G, alpha) / (H + lambda)`, before shrinkage.
pub fn leaf_weight(sum_g: f64, sum_h: f64, hp: &Hyperparams) -> Result<f64> {
    let denom = sum_h + hp.lambda;
    if denom == 0.0 {
        return Err(Error::DegenerateLeaf);
    }
    Ok(-soft_threshold(sum_g, hp.alpha) / denom)
}

/// Structure-score improvement of a split, net of `gamma`.
pub fn split_gain(g_left: f64, h_left: f64, g_right: f64, h_right: f64, hp: &Hyperparams) -> f64 {
    let lambda = hp.lambda;
    let score = |g: f64, h: f64| {
        let d = h + lambda;
        if d == 0.0 {
            0.0
        } else {
            g * g / d
        }
    };
    0.5 * (score(g_left, h_left) + score(g_right, h_right) - score(g_left + g_right, h_left + h_right)) - hp.gamma
}

/// Whether a candidate split may be taken.
pub fn admissible(gain: f64, h_left: f64, h_right: f64, hp: &Hyperparams) -> bool {
    gain > 0.0 && h_left.min(h_right) >= hp.min_child_weight
}
