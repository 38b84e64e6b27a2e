//! The booster on a hand-made matrix: one informative column, one noise column.
//! Shows the split the first tree picks, the loss falling tree by tree, and
//! the JSON model format round trip.

use triage::data::{Dataset, FeatureMatrix, Stratum, Task};
use triage::gbtree::{from_json, logistic_grad_hess, mean_logloss, to_json, train_ensemble, Hyperparams, Node};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
    let strata: Vec<Stratum> = (0..40).map(|i| if i >= 24 { Stratum::Dead } else { Stratum::Mild }).collect();
    let m = FeatureMatrix::from_rows(&rows, vec!["dose".into(), "noise".into()], Some(strata))?;
    let ds = Dataset::new(m, Task::Mortality);

    let hp = Hyperparams { n_estimators: 8, max_depth: 2, learning_rate: 0.5, ..Default::default() };
    let model = train_ensemble(&ds, &hp, 42)?;
    if let Node::Split { feature, threshold, .. } = &model.trees[0].nodes[0] {
        println!("first tree splits on {} < {threshold}", model.feature_names[*feature]);
    }

    let labels = &ds.labels.labels;
    let mut margins = vec![model.base_margin(); ds.len()];
    println!("tree  logloss");
    println!("   0  {:.5}", mean_logloss(&margins, labels));
    for (t, tree) in model.trees.iter().enumerate() {
        for (i, row) in ds.matrix.rows().enumerate() {
            margins[i] += model.hyperparams.learning_rate * tree.predict(row);
        }
        println!("{:>4}  {:.5}", t + 1, mean_logloss(&margins, labels));
    }
    let g = logistic_grad_hess(margins[0], labels[0]);
    println!("row 0 after training: gradient {:.4}, hessian {:.4}", g.g, g.h);

    let text = to_json(&model);
    let back = from_json(&text)?;
    assert_eq!(to_json(&back), text);
    println!("model JSON is {} bytes and round-trips exactly", text.len());
    Ok(())
}
