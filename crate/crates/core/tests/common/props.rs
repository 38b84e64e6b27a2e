//! Randomized property checks over the public API. Each returns a short summary or the first counterexample.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use triage::cluster::{
    default_gamma_mix, fit_column, kprototypes, kprototypes_from, partition_cost, prototype_of, yeo_johnson,
    KPrototypesConfig,
};
use triage::data::{
    drop_missing, encode, read_cohort, stratified_split, undersample_majority, Dataset, EncodeOptions, FeatureMatrix,
    Schema, Stratum, StratumTargets, Task, GENDER, SYMPTOM_PREFIX,
};
use triage::explain::TreeExplainer;
use triage::gbtree::{mean_logloss, to_json, train_ensemble, Hyperparams, Node, Tree};
use triage::metrics::{
    grid_search, roc_auc, scalar_metrics, stratified_folds, ConfusionMatrix, CvConfig, Grid, SelectionRule,
};
use triage::pipeline::BUNDLED_COHORT;

use super::*;

pub type Check = std::result::Result<String, String>;

macro_rules! ensure {
    // a NaN comparison fails the check
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

/// Every named check, in a fixed order.
pub type Prop = fn(u64) -> Check;

pub fn all() -> Vec<(&'static str, Prop)> {
    vec![
        ("cleaning is idempotent", clean_idempotent),
        ("encoded matrix complete with 0/1 categorical columns", encode_domain),
        ("undersampling keeps rows intact and the minority whole", undersample_membership),
        ("stratified split within one row per stratum", split_stratification),
        ("seeded stages reproducible", seeded_reproducibility),
        ("root split equals enumeration", root_split_oracle),
        ("children carry min_child_weight hessian", min_child_weight),
        ("no split with non-positive net gain", gamma_pruning),
        ("single-tree margin linear in learning rate", shrinkage_linearity),
        ("full-batch training loss non-increasing", loss_non_increase),
        ("model bytes deterministic", model_bytes_determinism),
        ("SHAP local accuracy on trained models", shap_local_accuracy),
        ("unused features get exactly zero SHAP", shap_dummy),
        ("mirrored features get equal SHAP", shap_symmetry),
        ("SHAP equals enumeration up to 10 features", shap_enumeration),
        ("metrics recover integer counts", metrics_round_trip),
        ("F equals precision equals recall when fp = fn", f_when_errors_balance),
        ("ROC AUC invariant to monotone transforms", auc_monotone),
        ("ROC AUC equals Mann-Whitney", auc_mann_whitney),
        ("CV folds partition rows with balanced classes", cv_folds),
        ("grid result independent of enumeration order", grid_order),
        ("Yeo-Johnson strictly increasing", yj_monotone),
        ("power transform output standardized", power_standardized),
        ("k-prototypes cost non-increasing", kproto_descent),
        ("k-prototypes reduces to k-means", kproto_kmeans),
        ("k-prototypes reaches the enumerated optimum (n <= 12)", kproto_brute_force),
    ]
}

fn cohort() -> triage::data::Cohort {
    read_cohort(BUNDLED_COHORT.as_bytes(), &Schema::bundled()).unwrap()
}

fn mortality_encoded() -> Dataset {
    let clean = drop_missing(&cohort(), 0.5, true).unwrap();
    Dataset::new(encode(&clean, EncodeOptions::default()).unwrap(), Task::Mortality)
}

pub fn clean_idempotent(_: u64) -> Check {
    let c = cohort();
    let mut n = 0;
    for cov in [0.3, 0.5, 0.7, 0.9] {
        for complete in [false, true] {
            let once = drop_missing(&c, cov, complete).unwrap();
            let twice = drop_missing(&once, cov, complete).unwrap();
            ensure!(once == twice, "coverage {cov} complete {complete}");
            n += 1;
        }
    }
    Ok(format!("{n} settings"))
}

pub fn encode_domain(_: u64) -> Check {
    let schema = Schema::bundled();
    let clean = drop_missing(&cohort(), 0.5, true).unwrap();
    for include_symptoms in [false, true] {
        let m = encode(&clean, EncodeOptions { include_symptoms }).unwrap();
        ensure!(m.rows().flatten().all(|v| v.is_finite()), "non-finite cell");
        let comorbid = schema.comorbidity_names();
        for (j, name) in m.column_names.iter().enumerate() {
            if name == GENDER || name.starts_with(SYMPTOM_PREFIX) || comorbid.contains(name) {
                ensure!(m.column(j).iter().all(|&v| v == 0.0 || v == 1.0), "{name} outside {{0,1}}");
            }
        }
    }
    Ok("complete cohort, with and without symptoms".into())
}

fn row_key(m: &FeatureMatrix, i: usize) -> (Vec<u64>, Stratum) {
    (m.row(i).iter().map(|v| v.to_bits()).collect(), m.strata[i])
}

pub fn undersample_membership(seed: u64) -> Check {
    let ds = mortality_encoded();
    let mut pool: HashMap<(Vec<u64>, Stratum), usize> = HashMap::new();
    for i in 0..ds.len() {
        *pool.entry(row_key(&ds.matrix, i)).or_default() += 1;
    }
    let dead = ds.matrix.strata.iter().filter(|s| **s == Stratum::Dead).count();
    let mut r = rng(seed);
    for _ in 0..30 {
        let targets: StratumTargets = [
            (Stratum::Mild, r.random_range(10..=100)),
            (Stratum::Moderate, r.random_range(10..=99)),
            (Stratum::Severe, r.random_range(10..=81)),
        ]
        .into_iter()
        .collect();
        let out = undersample_majority(&ds, &targets, r.random()).unwrap();
        let mut left = pool.clone();
        for i in 0..out.len() {
            let slot = left.get_mut(&row_key(&out.matrix, i));
            ensure!(slot.as_ref().is_some_and(|c| **c > 0), "row {i} not drawn from the input");
            *slot.unwrap() -= 1;
        }
        let count = |s: Stratum| out.matrix.strata.iter().filter(|x| **x == s).count();
        ensure!(count(Stratum::Dead) == dead, "minority changed");
        for (s, t) in &targets {
            ensure!(count(*s) == *t, "{s:?} has {} not {t}", count(*s));
        }
    }
    Ok("30 random targets".into())
}

fn random_strata_dataset(r: &mut ChaCha8Rng) -> Dataset {
    let mut rows = Vec::new();
    let mut strata = Vec::new();
    for s in Stratum::ALL {
        // at least one row per side for every fraction drawn below
        for _ in 0..r.random_range(12..60) {
            rows.push(vec![r.random::<f64>(), rows.len() as f64]);
            strata.push(s);
        }
    }
    Dataset::new(FeatureMatrix::from_rows(&rows, vec!["x".into(), "id".into()], Some(strata)).unwrap(), Task::Mortality)
}

pub fn split_stratification(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..100 {
        let ds = random_strata_dataset(&mut r);
        let f = r.random_range(0.1..0.5);
        let (train, val) = stratified_split(&ds, f, r.random()).unwrap();
        ensure!(train.len() + val.len() == ds.len(), "case {case}: rows lost");
        for s in Stratum::ALL {
            let n = ds.matrix.strata.iter().filter(|x| **x == s).count() as f64;
            let v = val.matrix.strata.iter().filter(|x| **x == s).count() as f64;
            ensure!((v - f * n).abs() <= 1.0, "case {case}: {s:?} has {v} of {n} at {f}");
        }
        let mut ids: Vec<u64> = train.matrix.column(1).iter().chain(&val.matrix.column(1)).map(|v| *v as u64).collect();
        ids.sort_unstable();
        ensure!(ids == (0..ds.len() as u64).collect::<Vec<_>>(), "case {case}: not a partition");
    }
    Ok("100 random strata mixes".into())
}

pub fn seeded_reproducibility(seed: u64) -> Check {
    let ds = mortality_encoded();
    let targets = triage::data::default_undersample_targets();
    let a = undersample_majority(&ds, &targets, seed).unwrap();
    ensure!(a.matrix == undersample_majority(&ds, &targets, seed).unwrap().matrix, "undersample");
    let (t1, v1) = stratified_split(&a, 0.2, seed).unwrap();
    let (t2, v2) = stratified_split(&a, 0.2, seed).unwrap();
    ensure!(t1.matrix == t2.matrix && v1.matrix == v2.matrix, "split");
    let folds = stratified_folds(&a.labels.labels, 5, seed).unwrap();
    ensure!(folds == stratified_folds(&a.labels.labels, 5, seed).unwrap(), "folds");
    let hp = Hyperparams { subsample: 0.7, colsample_bytree: 0.6, n_estimators: 20, ..Hyperparams::default() };
    ensure!(train_ensemble(&t1, &hp, seed).unwrap() == train_ensemble(&t2, &hp, seed).unwrap(), "training");
    let rows: Vec<Vec<f64>> = t1.matrix.rows().map(|r| r[..4].to_vec()).collect();
    let cfg = KPrototypesConfig { k: 3, seed, ..Default::default() };
    let mask = [false; 4];
    ensure!(
        kprototypes(&rows, &mask, &cfg).unwrap().assignments == kprototypes(&rows, &mask, &cfg).unwrap().assignments,
        "clustering"
    );
    Ok("undersample, split, folds, training, clustering".into())
}

pub fn root_split_oracle(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..200 {
        let inst = split_instance(&mut r);
        let (got, want) = (trained_root_split(&inst), brute_force_root_split(&inst));
        ensure!(got == want, "case {case}: {got:?} vs {want:?}");
    }
    Ok("200 instances".into())
}

fn noisy_hp(r: &mut ChaCha8Rng) -> Hyperparams {
    Hyperparams {
        n_estimators: r.random_range(3..15),
        max_depth: r.random_range(1..6),
        learning_rate: r.random_range(0.05..0.5),
        lambda: r.random_range(0.0..3.0),
        alpha: r.random_range(0.0..1.0),
        gamma: [0.0, 0.1, 0.5, 2.0][r.random_range(0..4)],
        min_child_weight: [0.0, 1.0, 3.0, 8.0][r.random_range(0..4)],
        ..Hyperparams::default()
    }
}

fn for_each_tree_with_margins(
    model: &triage::gbtree::GBTModel,
    ds: &Dataset,
    mut f: impl FnMut(&Tree, &[f64]) -> Check,
) -> Check {
    let mut margins = vec![model.base_margin(); ds.len()];
    for tree in &model.trees {
        f(tree, &margins)?;
        for (i, m) in margins.iter_mut().enumerate() {
            *m += model.hyperparams.learning_rate * tree.predict(ds.matrix.row(i));
        }
    }
    Ok(String::new())
}

pub fn min_child_weight(seed: u64) -> Check {
    let mut r = rng(seed);
    let mut splits = 0;
    for case in 0..40 {
        let (n, d) = (r.random_range(30..150), r.random_range(1..5));
        let ds = noisy_dataset(&mut r, n, d);
        let hp = noisy_hp(&mut r);
        let model = train_ensemble(&ds, &hp, r.random()).unwrap();
        for_each_tree_with_margins(&model, &ds, |tree, margins| {
            let mass = hessian_mass(tree, &ds, margins);
            for n in &tree.nodes {
                if let Node::Split { left, right, .. } = n {
                    splits += 1;
                    ensure!(mass[*left].min(mass[*right]) >= hp.min_child_weight - 1e-9, "case {case}");
                }
            }
            Ok(String::new())
        })?;
    }
    Ok(format!("40 models, {splits} splits"))
}

pub fn gamma_pruning(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..40 {
        let (n, d) = (r.random_range(30..150), r.random_range(1..5));
        let ds = noisy_dataset(&mut r, n, d);
        let model = train_ensemble(&ds, &noisy_hp(&mut r), r.random()).unwrap();
        for n in model.trees.iter().flat_map(|t| &t.nodes) {
            if let Node::Split { gain, .. } = n {
                ensure!(*gain > 0.0, "case {case}: gain {gain}");
            }
        }
    }
    let ds = noisy_dataset(&mut r, 100, 3);
    let huge = train_ensemble(&ds, &Hyperparams { gamma: 1e9, n_estimators: 5, ..Hyperparams::default() }, 0).unwrap();
    ensure!(huge.trees.iter().all(|t| t.nodes.len() == 1), "huge gamma still splits");
    Ok("40 models plus a huge-gamma model".into())
}

pub fn shrinkage_linearity(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..30 {
        let ds = noisy_dataset(&mut r, 80, 3);
        let base = Hyperparams { n_estimators: 1, learning_rate: r.random_range(0.01..0.5), ..noisy_hp(&mut r) };
        let k = r.random_range(1.5..2.0);
        let scaled = Hyperparams { learning_rate: base.learning_rate * k, ..base };
        let a = train_ensemble(&ds, &base, 1).unwrap();
        let b = train_ensemble(&ds, &scaled, 1).unwrap();
        for row in ds.matrix.rows() {
            let da = a.predict_margin(row).unwrap() - a.base_margin();
            let db = b.predict_margin(row).unwrap() - b.base_margin();
            ensure!((db - k * da).abs() <= 1e-12 * da.abs().max(1.0), "case {case}");
        }
    }
    Ok("30 single-tree pairs".into())
}

pub fn loss_non_increase(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..30 {
        let (n, d) = (r.random_range(40..150), r.random_range(1..5));
        let ds = noisy_dataset(&mut r, n, d);
        let hp =
            Hyperparams { alpha: 0.0, n_estimators: 25, learning_rate: r.random_range(0.05..0.6), ..noisy_hp(&mut r) };
        let model = train_ensemble(&ds, &hp, 0).unwrap();
        let mut last = f64::INFINITY;
        let mut partial = model.clone();
        for t in 0..=model.trees.len() {
            partial.trees = model.trees[..t].to_vec();
            let loss = mean_logloss(&partial.predict_margin_matrix(&ds.matrix).unwrap(), &ds.labels.labels);
            ensure!(loss <= last + 1e-12, "case {case} round {t}: {loss} > {last}");
            last = loss;
        }
    }
    Ok("30 models x 25 rounds".into())
}

pub fn model_bytes_determinism(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..10 {
        let ds = noisy_dataset(&mut r, 120, 4);
        let hp = Hyperparams { subsample: 0.7, colsample_bytree: 0.5, ..noisy_hp(&mut r) };
        let s = r.random();
        let a = to_json(&train_ensemble(&ds, &hp, s).unwrap());
        let b = to_json(&train_ensemble(&ds, &hp, s).unwrap());
        ensure!(a == b, "case {case}");
    }
    Ok("10 subsampled models".into())
}

pub fn shap_local_accuracy(seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = r.random_range(1..7);
        let ds = noisy_dataset(&mut r, 100, d);
        let model = train_ensemble(&ds, &noisy_hp(&mut r), 0).unwrap();
        let ex = TreeExplainer::from_model(&model).unwrap();
        for row in ds.matrix.rows() {
            let e = ex.explain(row).unwrap();
            worst = worst.max(e.additivity_error().abs() / e.predicted_margin.abs().max(1.0));
        }
    }
    ensure!(worst <= 1e-9, "relative error {worst:e}");
    Ok(format!("20 models, worst {worst:.1e}"))
}

pub fn shap_dummy(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..50 {
        let model = random_model(&mut r, 8, 5, 3);
        let used: Vec<bool> =
            (0..model.n_features()).map(|j| model.trees.iter().any(|t| t.split_features().any(|f| f == j))).collect();
        let ex = TreeExplainer::from_model(&model).unwrap();
        for _ in 0..5 {
            let row: Vec<f64> = (0..model.n_features()).map(|_| r.random()).collect();
            let e = ex.explain(&row).unwrap();
            for (j, u) in used.iter().enumerate() {
                ensure!(*u || e.contributions[j] == 0.0, "case {case}: feature {j} = {}", e.contributions[j]);
            }
        }
    }
    Ok("50 models".into())
}

fn mirrored(tree: &Tree) -> Tree {
    let nodes = tree
        .nodes
        .iter()
        .map(|n| match n.clone() {
            Node::Split { feature, threshold, left, right, default_direction, gain, cover } => {
                Node::Split { feature: 1 - feature, threshold, left, right, default_direction, gain, cover }
            }
            leaf => leaf,
        })
        .collect();
    Tree { nodes }
}

pub fn shap_symmetry(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..50 {
        let mut model = random_model(&mut r, 2, 3, 3);
        if model.n_features() < 2 {
            model.feature_names = vec!["f0".into(), "f1".into()];
            model.training_meta.feature_ranges.push(model.training_meta.feature_ranges[0]);
        }
        let half = model.trees.clone();
        model.trees.extend(half.iter().map(mirrored));
        let ex = TreeExplainer::from_model(&model).unwrap();
        for _ in 0..5 {
            let v = r.random::<f64>();
            let e = ex.explain(&[v, v]).unwrap();
            let [a, b] = [e.contributions[0], e.contributions[1]];
            ensure!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "case {case}: {a} vs {b}");
        }
    }
    Ok("50 mirrored ensembles".into())
}

pub fn shap_enumeration(seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let model = random_model(&mut r, 10, 5, 4);
        let c = check_shap(&model, &mut r, 4);
        worst = worst.max(c.max_phi_error);
        ensure!(c.max_local_rel_error <= 1e-9, "local accuracy {:e}", c.max_local_rel_error);
    }
    ensure!(worst <= 1e-8, "max error {worst:e}");
    Ok(format!("40 models, worst {worst:.1e}"))
}

pub fn metrics_round_trip(seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..2000 {
        let cm = ConfusionMatrix {
            tp: r.random_range(0..10_000),
            fp: r.random_range(0..10_000),
            tn: r.random_range(0..10_000),
            fn_: r.random_range(0..10_000),
        };
        let m = scalar_metrics(&cm);
        if let Some(rec) = m.recall {
            ensure!((rec * (cm.tp + cm.fn_) as f64 - cm.tp as f64).abs() <= 1e-9, "{cm:?}");
        }
        if let Some(p) = m.precision {
            ensure!((p * (cm.tp + cm.fp) as f64 - cm.tp as f64).abs() <= 1e-9, "{cm:?}");
        }
    }
    Ok("2000 matrices".into())
}

pub fn f_when_errors_balance(seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..2000 {
        let e = r.random_range(0..500);
        let cm = ConfusionMatrix { tp: r.random_range(1..500), fp: e, tn: r.random_range(0..500), fn_: e };
        let m = scalar_metrics(&cm);
        let (p, rc, f) = (m.precision.unwrap(), m.recall.unwrap(), m.f_score.unwrap());
        ensure!((p - rc).abs() < 1e-15 && (f - p).abs() < 1e-12, "{cm:?}");
    }
    Ok("2000 matrices".into())
}

pub fn auc_monotone(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..100 {
        let (labels, scores) = auc_fixture(&mut r, 200);
        let t: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + s.powi(3) - 7.0).collect();
        let (a, b) = (roc_auc(&labels, &scores).unwrap(), roc_auc(&labels, &t).unwrap());
        ensure!((a - b).abs() <= 1e-12, "case {case}: {a} vs {b}");
    }
    Ok("100 fixtures".into())
}

pub fn auc_mann_whitney(seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (labels, scores) = auc_fixture(&mut r, 200);
        worst = worst.max((roc_auc(&labels, &scores).unwrap() - mann_whitney_auc(&labels, &scores)).abs());
    }
    ensure!(worst <= 1e-12, "max difference {worst:e}");
    Ok(format!("100 fixtures, worst {worst:.1e}"))
}

pub fn cv_folds(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..200 {
        let n = r.random_range(10..300);
        let k = r.random_range(2..=10usize).min(n / 4).max(2);
        let p = r.random_range(0.15..0.85);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(p))).collect();
        labels[..k].fill(1);
        labels[k..2 * k].fill(0);
        let folds = stratified_folds(&labels, k, r.random()).unwrap();
        ensure!(folds.len() == n && folds.iter().all(|&f| f < k), "case {case}: bad fold ids");
        for class in [0u8, 1] {
            let total = labels.iter().filter(|&&y| y == class).count() as f64;
            for f in 0..k {
                let c = labels.iter().zip(&folds).filter(|(y, g)| **y == class && **g == f).count() as f64;
                ensure!((c - total / k as f64).abs() < 1.0, "case {case}: fold {f} class {class} has {c} of {total}");
            }
        }
    }
    Ok("200 label vectors".into())
}

pub fn grid_order(seed: u64) -> Check {
    let mut r = rng(seed);
    let ds = noisy_dataset(&mut r, 90, 3);
    let cv = CvConfig { folds: 3, repeats: 1, seed, threshold: 0.5 };
    let base = Hyperparams { n_estimators: 8, ..Hyperparams::default() };
    let mut grid: Grid = Grid::new();
    grid.insert("max_depth".into(), vec![1.0, 2.0, 3.0]);
    grid.insert("gamma".into(), vec![0.0, 0.5]);
    grid.insert("lambda".into(), vec![1.0, 1.0, 4.0]);
    let reference = grid_search(&ds, &grid, &base, &cv, SelectionRule::FScore).unwrap().best;
    for _ in 0..3 {
        let mut shuffled = grid.clone();
        for v in shuffled.values_mut() {
            v.shuffle(&mut r);
        }
        let best = grid_search(&ds, &shuffled, &base, &cv, SelectionRule::FScore).unwrap().best;
        ensure!(best == reference, "{best:?} vs {reference:?}");
    }
    Ok("3 permutations of an 18-point grid".into())
}

pub fn yj_monotone(seed: u64) -> Check {
    let mut r = rng(seed);
    for _ in 0..100_000 {
        let lambda = match r.random_range(0..5) {
            0 => 0.0,
            1 => 2.0,
            _ => r.random_range(-5.0..5.0),
        };
        let x1 = r.random_range(-20.0..20.0);
        let x2 = x1 + r.random_range(1e-3..10.0);
        let (a, b) = (yeo_johnson(x1, lambda), yeo_johnson(x2, lambda));
        ensure!(a < b, "lambda {lambda}: f({x1}) = {a} >= f({x2}) = {b}");
    }
    Ok("100000 pairs".into())
}

pub fn power_standardized(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..50 {
        let n = r.random_range(10..300);
        let xs: Vec<f64> =
            (0..n).map(|_| (r.random_range(-1.0..2.5f64)).exp() * r.random_range(1.0..50.0) - 3.0).collect();
        let t = fit_column("x", &xs).unwrap();
        let z: Vec<f64> = xs.iter().map(|&x| t.apply(x)).collect();
        let mean = z.iter().sum::<f64>() / n as f64;
        let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        ensure!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9, "case {case}: mean {mean:e} sd {sd}");
    }
    Ok("50 skewed columns".into())
}

/// Two numeric columns (two shifted groups) and one categorical column with three levels.
fn mixed_rows(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let shift = if i % 2 == 0 { 0.0 } else { 3.0 };
            vec![r.random::<f64>() + shift, r.random::<f64>() * 2.0, f64::from(r.random_range(0u8..3))]
        })
        .collect()
}

const MIXED: [bool; 3] = [false, false, true];

pub fn kproto_descent(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..50 {
        let n = r.random_range(6..80);
        let rows = mixed_rows(&mut r, n);
        let cfg = KPrototypesConfig { k: r.random_range(1..5), restarts: 3, seed: r.random(), ..Default::default() };
        let a = kprototypes(&rows, &MIXED, &cfg).unwrap();
        ensure!(a.cost_history.windows(2).all(|w| w[1] <= w[0] + 1e-12), "case {case}: {:?}", a.cost_history);
    }
    Ok("50 runs".into())
}

fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>, iters: usize) -> Vec<usize> {
    let nearest = |row: &[f64], centers: &[Vec<f64>]| {
        let d: Vec<f64> = centers.iter().map(|c| row.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum()).collect();
        (0..d.len()).fold(0, |b, i| if d[i] < d[b] { i } else { b })
    };
    let mut labels: Vec<usize> = rows.iter().map(|x| nearest(x, &centers)).collect();
    for _ in 0..iters {
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows.iter().zip(&labels).filter(|(_, l)| **l == c).map(|(x, _)| x).collect();
            if !members.is_empty() {
                for (j, v) in center.iter_mut().enumerate() {
                    *v = members.iter().map(|x| x[j]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        let next: Vec<usize> = rows.iter().map(|x| nearest(x, &centers)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

pub fn kproto_kmeans(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..100 {
        let n = r.random_range(4..60);
        let rows: Vec<Vec<f64>> = mixed_rows(&mut r, n).into_iter().map(|x| x[..2].to_vec()).collect();
        let k = r.random_range(2..4).min(n);
        let init: Vec<Vec<f64>> = rows[..k].to_vec();
        let got = kprototypes_from(&rows, &[false, false], init.clone(), 0.0, 100).unwrap().assignments;
        ensure!(got == lloyd(&rows, init, 100), "case {case}");
    }
    Ok("100 instances".into())
}

pub fn kproto_brute_force(seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..60 {
        let n = r.random_range(4..=12);
        let rows = mixed_rows(&mut r, n);
        let gamma = default_gamma_mix(&rows, &MIXED);
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << (n - 1)) {
            let assign: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let protos: Vec<Vec<f64>> = (0..2)
                .map(|c| {
                    prototype_of(
                        &(0..n).filter(|&i| assign[i] == c).map(|i| rows[i].as_slice()).collect::<Vec<_>>(),
                        &MIXED,
                    )
                })
                .collect();
            best = best.min(partition_cost(&rows, &assign, &protos, &MIXED, gamma));
        }
        let got =
            kprototypes(&rows, &MIXED, &KPrototypesConfig { k: 2, seed: r.random(), ..Default::default() }).unwrap();
        ensure!((got.cost - best).abs() < 1e-9, "case {case}: {} vs {best}", got.cost);
    }
    Ok("60 instances".into())
}
