use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Roc,
    Pr,
}

/// One operating point. ROC: `x` = FPR, `y` = TPR. PR: `x` = recall, `y` = precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

/// Cumulative (threshold, tp, fp) after each distinct score, highest first.
fn sweep(labels: &[u8], scores: &[f64]) -> Result<Vec<(f64, u64, u64)>> {
    if labels.len() != scores.len() {
        return Err(Error::Metric(format!("{} labels but {} scores", labels.len(), scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((t, tp, fp));
    }
    Ok(out)
}

fn class_counts(labels: &[u8]) -> (u64, u64) {
    let pos = labels.iter().filter(|&&y| y != 0).count() as u64;
    (pos, labels.len() as u64 - pos)
}

/// ROC curve from (0,0) to (1,1); tied scores form one diagonal step.
pub fn roc_curve(labels: &[u8], scores: &[f64]) -> Result<Curve> {
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("ROC needs both classes".into()));
    }
    let mut points = vec![CurvePoint { threshold: f64::INFINITY, x: 0.0, y: 0.0 }];
    // trapezoids summed in integer counts, normalized once
    let mut area2 = 0u128;
    let (mut ptp, mut pfp) = (0u64, 0u64);
    for (t, tp, fp) in sweep(labels, scores)? {
        area2 += u128::from(fp - pfp) * u128::from(tp + ptp);
        ptp = tp;
        pfp = fp;
        points.push(CurvePoint { threshold: t, x: fp as f64 / neg as f64, y: tp as f64 / pos as f64 });
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(Curve { kind: CurveKind::Roc, points, auc })
}

pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    Ok(roc_curve(labels, scores)?.auc)
}

/// Precision-recall curve; the area is average precision, i.e. each achieved
/// recall increment is weighted by the precision reached at that threshold.
pub fn pr_curve(labels: &[u8], scores: &[f64]) -> Result<Curve> {
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::Metric("PR curve needs positive labels".into()));
    }
    let mut points = Vec::new();
    let mut auc = 0.0;
    let mut prev_tp = 0u64;
    for (t, tp, fp) in sweep(labels, scores)? {
        let precision = tp as f64 / (tp + fp) as f64;
        auc += (tp - prev_tp) as f64 / pos as f64 * precision;
        prev_tp = tp;
        points.push(CurvePoint { threshold: t, x: tp as f64 / pos as f64, y: precision });
    }
    Ok(Curve { kind: CurveKind::Pr, points, auc })
}
