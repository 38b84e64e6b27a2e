//! Repeated stratified cross-validation of the mortality preset on the training split.
//!
//! ```sh
//! cargo run --release --example cross_validate -- [REPEATS]
//! ```

use triage::data::{Schema, Task};
use triage::metrics::{cv_summary, repeated_stratified_cv, CvConfig};
use triage::pipeline::{load_cohort, prepare, RunConfig};
use triage::rng::derive_seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let repeats = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let cfg = RunConfig::new(Task::Mortality);
    let schema = Schema::bundled();
    let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
    let cv = CvConfig { repeats, seed: derive_seed(cfg.seed, "cv"), ..Default::default() };
    let rep = repeated_stratified_cv(&p.train, &cfg.hyperparams, &cv)?;
    print!("{}", cv_summary(&rep));
    let worst = rep.scores.iter().min_by(|a, b| a.auc_roc.total_cmp(&b.auc_roc)).expect("at least one fold");
    println!("weakest fold: repeat {} fold {} auc {:.4}", worst.repeat, worst.fold, worst.auc_roc);
    Ok(())
}
