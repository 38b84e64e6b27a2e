//! Confusion-matrix metrics and ROC/PR curves on a small scored sample with ties.

use triage::metrics::{confusion, pr_curve, roc_curve, scalar_metrics, threshold_scores};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let labels = [1u8, 1, 0, 1, 0, 0, 1, 0, 0, 1];
    let scores = [0.92, 0.81, 0.81, 0.66, 0.52, 0.40, 0.40, 0.33, 0.12, 0.05];
    for t in [0.3, 0.5, 0.7] {
        let cm = confusion(&labels, &threshold_scores(&scores, t))?;
        let m = scalar_metrics(&cm);
        println!(
            "threshold {t}: tp={} fp={} tn={} fn={}  accuracy {:.3}  f {:.3}",
            cm.tp,
            cm.fp,
            cm.tn,
            cm.fn_,
            m.accuracy.unwrap_or(f64::NAN),
            m.f_score.unwrap_or(f64::NAN)
        );
    }
    let roc = roc_curve(&labels, &scores)?;
    println!("\nROC (auc {:.4})", roc.auc);
    for pt in &roc.points {
        println!("  threshold {:>5}  fpr {:.2}  tpr {:.2}", format!("{:.2}", pt.threshold), pt.x, pt.y);
    }
    println!("PR average precision {:.4}", pr_curve(&labels, &scores)?.auc);
    Ok(())
}
