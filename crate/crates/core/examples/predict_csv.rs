//! Batch scoring: write a model to disk, read it back and score a CSV whose
//! columns come in a different order than the model's.

use triage::data::{Schema, Task};
use triage::gbtree::{load_model, save_model};
use triage::pipeline::{fit, load_cohort, predictions_csv, prepare, read_feature_rows, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::new(Task::Mortality);
    let schema = Schema::bundled();
    let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
    let (model, _) = fit(&p.train, &cfg)?;
    let dir = std::env::temp_dir().join("triage-predict-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.json");
    save_model(&model, &path)?;
    let model = load_model(&path)?;

    // columns reversed, first five validation rows
    let names: Vec<&String> = model.feature_names.iter().rev().collect();
    let mut text = names.iter().map(|n| format!("\"{n}\"")).collect::<Vec<_>>().join(",") + "\n";
    for i in 0..5 {
        let row = p.val.matrix.row(i);
        let cells: Vec<String> = (0..row.len()).rev().map(|j| format!("{:?}", row[j])).collect();
        text += &(cells.join(",") + "\n");
    }
    let rows = read_feature_rows(&text, &model)?;
    print!("{}", predictions_csv(&model, &rows, 0.5)?);
    println!("(model saved at {})", path.display());
    Ok(())
}
