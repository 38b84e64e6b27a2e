//! Prepare the bundled cohort, train the mortality booster and score the validation split.
//!
//! ```sh
//! cargo run --release --example train_and_evaluate -- [mortality|severity] [SEED]
//! ```

use triage::data::{Schema, Task};
use triage::pipeline::{evaluate, fit, load_cohort, prepare, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let task: Task = args.next().as_deref().unwrap_or("mortality").parse()?;
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let mut cfg = RunConfig::new(task);
    cfg.seed = seed;
    let schema = Schema::bundled();
    let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
    println!(
        "{task}: {} raw records, {} after cleaning; train {} ({} positive), val {} ({} positive)",
        p.raw_records,
        p.cleaned_records,
        p.train.len(),
        p.train.labels.positives(),
        p.val.len(),
        p.val.labels.positives()
    );

    let (model, _) = fit(&p.train, &cfg)?;
    let e = evaluate(&model, &p.val, cfg.threshold)?;
    let cm = e.confusion;
    println!("confusion tp={} fp={} tn={} fn={}", cm.tp, cm.fp, cm.tn, cm.fn_);
    for (name, v) in e.report.fields() {
        println!("{name:<12} {}", v.map_or("undefined".into(), |x| format!("{x:.4}")));
    }
    println!("{:<12} {:.4}\n{:<12} {:.4}", "auc_roc", e.roc.auc, "auc_pr", e.pr.auc);
    Ok(())
}
