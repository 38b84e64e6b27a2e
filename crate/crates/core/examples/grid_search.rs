//! Small hyperparameter grid over depth and learning rate, selected by mean F-score.

use triage::data::{Schema, Task};
use triage::metrics::{grid_search, parse_grid, CvConfig, SelectionRule};
use triage::pipeline::{load_cohort, prepare, RunConfig};

const GRID: &str = "
[grid]
max_depth = [2, 4]
learning_rate = [0.1, 0.3]
n_estimators = [50]
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::new(Task::Mortality);
    let schema = Schema::bundled();
    let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
    let grid = parse_grid(GRID)?;
    let cv = CvConfig { repeats: 3, seed: 11, ..Default::default() };
    let res = grid_search(&p.train, &grid, &cfg.hyperparams, &cv, SelectionRule::FScore)?;
    println!("{:<40} {:>8} {:>8} {:>8}", "point", "f_score", "accuracy", "auc");
    let fmt = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.4}"));
    for pt in &res.table {
        let name = pt.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
        println!("{name:<40} {:>8} {:>8} {:>8}", fmt(pt.mean_f_score), fmt(pt.mean_accuracy), fmt(pt.mean_auc_roc));
    }
    println!(
        "selected max_depth={} learning_rate={} (refit on all {} training rows)",
        res.best.max_depth,
        res.best.learning_rate,
        p.train.len()
    );
    Ok(())
}
