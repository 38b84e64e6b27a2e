//! Exact TreeSHAP attributions for the severity model: global ranking from
//! mean |SHAP| plus the breakdown of one validation patient.

use triage::data::{Schema, Task};
use triage::explain::TreeExplainer;
use triage::gbtree::sigmoid;
use triage::pipeline::{explain, fit, load_cohort, prepare, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::new(Task::Severity);
    let schema = Schema::bundled();
    let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
    let (model, _) = fit(&p.train, &cfg)?;

    let (summary, _) = explain(&model, &p.val.matrix)?;
    println!("mean |SHAP| over {} validation rows (base value {:.4}):", summary.rows, summary.base_value);
    for (name, v) in summary.ranking.entries.iter().take(8) {
        println!("  {name:<28} {v:.4}");
    }
    println!("largest additivity error {:.2e}", summary.max_additivity_error);

    let explainer = TreeExplainer::from_model(&model)?;
    let row = p.val.matrix.row(0);
    let e = explainer.explain(row)?;
    let mut parts: Vec<(usize, f64)> = e.contributions.iter().copied().enumerate().collect();
    parts.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    println!("\npatient 0: P(severe) = {:.4}", sigmoid(e.predicted_margin));
    for (j, phi) in parts.into_iter().take(5) {
        println!("  {:<28} value {:>9.3}  shap {:+.4}", model.feature_names[j], row[j], phi);
    }
    Ok(())
}
