//! Yeo-Johnson power transform with maximum-likelihood lambda.

use serde::Serialize;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

pub const LAMBDA_RANGE: (f64, f64) = (-5.0, 5.0);
pub const LAMBDA_TOL: f64 = 1e-6;

pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        if lambda == 0.0 {
            x.ln_1p()
        } else {
            (lambda * x.ln_1p()).exp_m1() / lambda
        }
    } else {
        let l2 = 2.0 - lambda;
        if l2 == 0.0 {
            -(-x).ln_1p()
        } else {
            -(l2 * (-x).ln_1p()).exp_m1() / l2
        }
    }
}

/// Profile log-likelihood of `lambda` for a normal model of the transformed data.
pub fn log_likelihood(xs: &[f64], lambda: f64) -> f64 {
    let n = xs.len() as f64;
    let t: Vec<f64> = xs.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let mean = t.iter().sum::<f64>() / n;
    let var = t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let jacobian: f64 = xs.iter().map(|&x| x.signum() * x.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnTransform {
    pub column: String,
    pub lambda: f64,
    /// Moments of the transformed fitting column (population sd).
    pub mean: f64,
    pub sd: f64,
}

impl ColumnTransform {
    pub fn apply(&self, x: f64) -> f64 {
        (yeo_johnson(x, self.lambda) - self.mean) / self.sd
    }
}

pub fn fit_column(name: &str, xs: &[f64]) -> Result<ColumnTransform> {
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Cluster(format!(
            "column `{name}` has {} distinct values; at least 3 are needed",
            distinct.len()
        )));
    }
    let lambda = golden_section_max(|l| log_likelihood(xs, l), LAMBDA_RANGE.0, LAMBDA_RANGE.1, LAMBDA_TOL);
    let t: Vec<f64> = xs.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let n = t.len() as f64;
    let mean = t.iter().sum::<f64>() / n;
    let sd = (t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ColumnTransform { column: name.to_string(), lambda, mean, sd })
}

/// Per-column transforms; columns not listed pass through untouched.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTransform {
    pub columns: Vec<ColumnTransform>,
}

impl PowerTransform {
    /// Fit every non-binary column of `m`.
    pub fn fit(m: &FeatureMatrix) -> Result<Self> {
        let columns = (0..m.n_cols())
            .filter(|&j| !m.is_binary_column(j))
            .map(|j| fit_column(&m.column_names[j], &m.column(j)))
            .collect::<Result<_>>()?;
        Ok(PowerTransform { columns })
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut rows: Vec<Vec<f64>> = m.rows().map(<[f64]>::to_vec).collect();
        for ct in &self.columns {
            let j =
                m.column_index(&ct.column).ok_or_else(|| Error::Cluster(format!("column `{}` missing", ct.column)))?;
            for row in &mut rows {
                row[j] = ct.apply(row[j]);
            }
        }
        FeatureMatrix::from_rows(&rows, m.column_names.clone(), Some(m.strata.clone()))
    }
}
