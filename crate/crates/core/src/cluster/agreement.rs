use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    /// `counts[class][cluster]`.
    pub counts: Vec<Vec<usize>>,
    /// `mapping[class]` is the cluster matched to that class, if any.
    pub mapping: Vec<Option<usize>>,
    pub rate: f64,
}

fn best_matching(
    counts: &[Vec<usize>],
    class: usize,
    used: &mut Vec<bool>,
    map: &mut Vec<Option<usize>>,
) -> (usize, Vec<Option<usize>>) {
    if class == counts.len() {
        return (0, map.clone());
    }
    // leaving a class unmatched only matters when clusters run out
    let mut best = if used.iter().all(|&u| u) {
        map[class] = None;
        best_matching(counts, class + 1, used, map)
    } else {
        (0, Vec::new())
    };
    let mut found = used.iter().all(|&u| u);
    for c in 0..used.len() {
        if used[c] {
            continue;
        }
        used[c] = true;
        map[class] = Some(c);
        let (score, m) = best_matching(counts, class + 1, used, map);
        let score = score + counts[class][c];
        if !found || score > best.0 {
            best = (score, m);
            found = true;
        }
        used[c] = false;
    }
    map[class] = None;
    best
}

/// Contingency of binary labels against clusters, with the accuracy of the
/// best one-to-one class-to-cluster matching.
pub fn cluster_label_agreement(clusters: &[usize], labels: &[u8], k: usize) -> Result<Agreement> {
    if clusters.len() != labels.len() {
        return Err(Error::Cluster(format!("{} clusters but {} labels", clusters.len(), labels.len())));
    }
    if let Some(&c) = clusters.iter().find(|&&c| c >= k) {
        return Err(Error::Cluster(format!("cluster id {c} out of range for k = {k}")));
    }
    let mut counts = vec![vec![0usize; k]; 2];
    for (&c, &y) in clusters.iter().zip(labels) {
        counts[usize::from(y != 0)][c] += 1;
    }
    let (matched, mapping) = best_matching(&counts, 0, &mut vec![false; k], &mut vec![None; 2]);
    let rate = if labels.is_empty() { 0.0 } else { matched as f64 / labels.len() as f64 };
    Ok(Agreement { counts, mapping, rate })
}
