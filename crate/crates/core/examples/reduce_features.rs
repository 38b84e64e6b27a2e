//! Retrain on the top ten SHAP features and on the published ten-feature
//! lists, comparing validation AUC with the full model.

use triage::data::{Schema, Task};
use triage::pipeline::{fit, load_cohort, prepare, reduce, ReduceFeatures, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = Schema::bundled();
    for task in [Task::Mortality, Task::Severity] {
        let cfg = RunConfig::new(task);
        let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
        let (full, _) = fit(&p.train, &cfg)?;
        for (label, sel) in [("top-10 SHAP", ReduceFeatures::TopK(10)), ("published", ReduceFeatures::Published)] {
            let r = reduce(&full, &p, &sel, &cfg)?;
            println!(
                "{task} {label:<12} full auc {:.4}  reduced auc {:.4}  [{}]",
                r.full.roc.auc,
                r.reduced.roc.auc,
                r.features.join(", ")
            );
        }
    }
    Ok(())
}
