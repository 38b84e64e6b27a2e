//! k-prototypes: k-means on numeric columns plus weighted Hamming distance on
//! categorical ones.

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPrototypesConfig {
    pub k: usize,
    /// Weight of one categorical mismatch; `None` uses half the mean numeric variance.
    pub gamma_mix: Option<f64>,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KPrototypesConfig {
    fn default() -> Self {
        KPrototypesConfig { k: 2, gamma_mix: None, restarts: 10, max_iter: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    pub assignments: Vec<usize>,
    /// Full-width prototypes: means in numeric columns, modes in categorical ones.
    pub prototypes: Vec<Vec<f64>>,
    pub cost: f64,
    /// Cost after each assignment step.
    pub cost_history: Vec<f64>,
    pub gamma_mix: f64,
}

/// Half the mean population variance of the numeric columns (1 if none).
pub fn default_gamma_mix(rows: &[Vec<f64>], categorical: &[bool]) -> f64 {
    let n = rows.len() as f64;
    let vars: Vec<f64> = (0..categorical.len())
        .filter(|&j| !categorical[j])
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n
        })
        .collect();
    if vars.is_empty() {
        1.0
    } else {
        0.5 * vars.iter().sum::<f64>() / vars.len() as f64
    }
}

pub fn dissimilarity(row: &[f64], proto: &[f64], categorical: &[bool], gamma_mix: f64) -> f64 {
    let mut numeric = 0.0;
    let mut mismatches = 0.0;
    for j in 0..row.len() {
        if categorical[j] {
            if row[j] != proto[j] {
                mismatches += 1.0;
            }
        } else {
            numeric += (row[j] - proto[j]).powi(2);
        }
    }
    numeric + gamma_mix * mismatches
}

/// Total cost of `assignments` against `prototypes`.
pub fn partition_cost(
    rows: &[Vec<f64>],
    assignments: &[usize],
    prototypes: &[Vec<f64>],
    categorical: &[bool],
    gamma_mix: f64,
) -> f64 {
    rows.iter().zip(assignments).map(|(r, &c)| dissimilarity(r, &prototypes[c], categorical, gamma_mix)).sum()
}

/// Cost-minimizing prototype of a group: column means and modes (ties to the smallest value).
pub fn prototype_of(rows: &[&[f64]], categorical: &[bool]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..categorical.len())
        .map(|j| {
            if categorical[j] {
                let mut vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                vals.sort_by(f64::total_cmp);
                let mut best = (vals[0], 0usize);
                let mut i = 0;
                while i < vals.len() {
                    let mut e = i;
                    while e < vals.len() && vals[e] == vals[i] {
                        e += 1;
                    }
                    if e - i > best.1 {
                        best = (vals[i], e - i);
                    }
                    i = e;
                }
                best.0
            } else {
                rows.iter().map(|r| r[j]).sum::<f64>() / n
            }
        })
        .collect()
}

fn assign(rows: &[Vec<f64>], prototypes: &[Vec<f64>], categorical: &[bool], gamma_mix: f64) -> Vec<usize> {
    rows.iter()
        .map(|r| {
            let mut best = (f64::INFINITY, 0);
            for (c, p) in prototypes.iter().enumerate() {
                let d = dissimilarity(r, p, categorical, gamma_mix);
                if d < best.0 {
                    best = (d, c);
                }
            }
            best.1
        })
        .collect()
}

fn check(rows: &[Vec<f64>], categorical: &[bool], k: usize, max_iter: usize) -> Result<()> {
    if k == 0 || k > rows.len() {
        return Err(Error::Cluster(format!("k = {k} must lie in 1..={}", rows.len())));
    }
    if max_iter == 0 {
        return Err(Error::Cluster("max_iter must be >= 1".into()));
    }
    if rows.iter().any(|r| r.len() != categorical.len()) {
        return Err(Error::Cluster("row width differs from the categorical mask".into()));
    }
    Ok(())
}

/// Lloyd iterations from the given initial prototypes. A cluster that loses
/// all rows keeps its previous prototype.
pub fn kprototypes_from(
    rows: &[Vec<f64>],
    categorical: &[bool],
    init: Vec<Vec<f64>>,
    gamma_mix: f64,
    max_iter: usize,
) -> Result<ClusterAssignment> {
    check(rows, categorical, init.len(), max_iter)?;
    let k = init.len();
    let mut prototypes = init;
    let mut assignments = assign(rows, &prototypes, categorical, gamma_mix);
    let mut cost_history = vec![partition_cost(rows, &assignments, &prototypes, categorical, gamma_mix)];
    for _ in 0..max_iter {
        for (c, proto) in prototypes.iter_mut().enumerate() {
            let members: Vec<&[f64]> =
                rows.iter().zip(&assignments).filter(|(_, &a)| a == c).map(|(r, _)| r.as_slice()).collect();
            if !members.is_empty() {
                *proto = prototype_of(&members, categorical);
            }
        }
        let next = assign(rows, &prototypes, categorical, gamma_mix);
        cost_history.push(partition_cost(rows, &next, &prototypes, categorical, gamma_mix));
        let done = next == assignments;
        assignments = next;
        if done {
            break;
        }
    }
    debug_assert_eq!(prototypes.len(), k);
    Ok(ClusterAssignment {
        cost: *cost_history.last().expect("at least one step"),
        assignments,
        prototypes,
        cost_history,
        gamma_mix,
    })
}

/// `k` distinct rows sampled without replacement.
fn initial_prototypes(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for r in rows {
        if !distinct.contains(&r) {
            distinct.push(r);
        }
    }
    if distinct.len() < k {
        return Err(Error::Cluster(format!("only {} distinct rows for k = {k}", distinct.len())));
    }
    let mut rng = rng::stream(seed);
    let mut picks = index::sample(&mut rng, distinct.len(), k).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| distinct[i].clone()).collect())
}

/// Best of `restarts` seeded runs (lowest cost, earliest restart on ties).
pub fn kprototypes(rows: &[Vec<f64>], categorical: &[bool], cfg: &KPrototypesConfig) -> Result<ClusterAssignment> {
    check(rows, categorical, cfg.k, cfg.max_iter)?;
    let gamma_mix = cfg.gamma_mix.unwrap_or_else(|| default_gamma_mix(rows, categorical));
    let runs = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let init = initial_prototypes(rows, cfg.k, rng::derive_seed(cfg.seed, &format!("kproto/restart/{r}")))?;
            kprototypes_from(rows, categorical, init, gamma_mix, cfg.max_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.cost < best.cost { run } else { best })
        .expect("at least one restart"))
}
