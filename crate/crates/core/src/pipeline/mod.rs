//! End-to-end orchestration behind the `triage` subcommands.
//!
//! Every randomized stage draws its seed from the master seed and a stage
//! label (`undersample`, `split`, `train`, `cv`, `reduce`, `cluster`), so each
//! stage can be reproduced alone. Every file written starts with `#` comment
//! lines carrying the tool version, seed and configuration hash.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    parse_undersample, undersample_preset, ConfigLayer, RunConfig, MORTALITY_VAL_FRACTION, SEVERITY_VAL_FRACTION,
    TOOL_VERSION,
};

use crate::cluster::{cluster_dataset, write_assignments_csv, write_transform_csv, ClusterRun, KPrototypesConfig};
use crate::data::{
    drop_missing, encode, read_cohort, select_biomarker_subset, stratified_split, undersample_majority, Cohort,
    Dataset, EncodeOptions, FeatureMatrix, Schema, Task,
};
use crate::error::{Error, Result};
use crate::explain::{
    explain_rows, explanation_meta_json, ranking_from_explanations, representative_tree, top_k_features,
    write_explanations_csv, write_ranking_csv, write_tree_csv, ExplanationMeta, FeatureRanking, RepresentativeTree,
    TreeExplainer,
};
use crate::gbtree::{fingerprint, load_model, save_model, train_ensemble, GBTModel};
use crate::metrics::{
    confusion, cv_summary, grid_search, pr_curve, repeated_stratified_cv, roc_curve, scalar_metrics, threshold_scores,
    write_curve_csv, write_cv_csv, write_grid_csv, write_metrics_csv, ConfusionMatrix, Curve, CvReport,
    GridSearchResult, MetricsReport,
};
use crate::rng::derive_seed;

/// The bundled synthetic cohort.
pub const BUNDLED_COHORT: &str = include_str!("../../data/cohort.csv");

/// Published top-10 mortality features, in decreasing importance.
pub const PUBLISHED_REDUCED_MORTALITY: [&str; 10] = [
    "Age",
    "Neutrophils(%)",
    "Creatinine",
    "Urea",
    "Alkaline phosphatase",
    "Serum Sodium",
    "Indirect Bilirubin",
    "N/L Ratio",
    "Mean Corpuscular Hemoglobin",
    "AST/SGOT",
];

/// Published top-10 severity features, in decreasing importance.
pub const PUBLISHED_REDUCED_SEVERITY: [&str; 10] = [
    "Age",
    "Urea",
    "hs-CRP",
    "D-D dimer",
    "Indirect Bilirubin",
    "AST/SGOT",
    "Monocytes(%)",
    "RBC Count",
    "WBC Count",
    "Ferritin",
];

pub fn published_reduced_features(task: Task) -> Vec<String> {
    let list: &[&str] = match task {
        Task::Mortality => &PUBLISHED_REDUCED_MORTALITY,
        Task::Severity => &PUBLISHED_REDUCED_SEVERITY,
    };
    list.iter().map(|s| s.to_string()).collect()
}

/// Fixed artifact names under the output directory.
pub mod files {
    pub const TRAIN: &str = "train.csv";
    pub const VAL: &str = "val.csv";
    pub const PROVENANCE: &str = "provenance.json";
    pub const MODEL: &str = "model.json";
    pub const TRAIN_LOG: &str = "train_log.txt";
    pub const GRID: &str = "grid.csv";
    pub const CV: &str = "cv.csv";
    pub const CV_SUMMARY: &str = "cv_summary.txt";
    pub const METRICS: &str = "metrics.csv";
    pub const ROC: &str = "roc.csv";
    pub const PR: &str = "pr.csv";
    pub const SHAP_VALUES: &str = "shap_values.csv";
    pub const SHAP_META: &str = "shap_meta.json";
    pub const IMPORTANCE: &str = "importance.csv";
    pub const TREE: &str = "representative_tree.csv";
    pub const REDUCED_FEATURES: &str = "reduced_features.txt";
    pub const REDUCED_MODEL: &str = "model_reduced.json";
    pub const REDUCED_METRICS: &str = "reduced_metrics.csv";
    pub const CLUSTERS: &str = "cluster_assignments.csv";
    pub const TRANSFORM: &str = "power_transform.csv";
    pub const AGREEMENT: &str = "cluster_agreement.csv";
    pub const PREDICTIONS: &str = "predictions.csv";
}

pub fn load_cohort(cfg: &RunConfig, schema: &Schema) -> Result<Cohort> {
    match &cfg.data {
        Some(p) => crate::data::load_csv(p, schema),
        None => read_cohort(BUNDLED_COHORT.as_bytes(), schema),
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    /// Cleaned, encoded (and for mortality, undersampled) data before the split.
    pub full: Dataset,
    pub train: Dataset,
    pub val: Dataset,
    pub raw_records: usize,
    pub cleaned_records: usize,
    pub biomarkers: Option<Vec<String>>,
}

/// Clean, encode, balance (mortality) or subset (severity), then split.
pub fn prepare(cohort: &Cohort, schema: &Schema, cfg: &RunConfig) -> Result<Prepared> {
    let opts = EncodeOptions { include_symptoms: cfg.include_symptoms };
    let (clean, biomarkers) = match cfg.task {
        Task::Mortality => (drop_missing(cohort, cfg.min_coverage, true)?, None),
        Task::Severity => {
            let (subset, chosen) = select_biomarker_subset(cohort, &schema.biomarker_names(), 3)?;
            (drop_missing(&subset, cfg.min_coverage, true)?, Some(chosen))
        }
    };
    let encoded = Dataset::new(encode(&clean, opts)?, cfg.task);
    let full = match cfg.task {
        Task::Mortality => undersample_majority(&encoded, &cfg.undersample, derive_seed(cfg.seed, "undersample"))?,
        Task::Severity => encoded,
    };
    let (train, val) = stratified_split(&full, cfg.val_fraction, derive_seed(cfg.seed, "split"))?;
    Ok(Prepared { full, train, val, raw_records: cohort.len(), cleaned_records: clean.len(), biomarkers })
}

fn ensure_out(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(&cfg.out)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn commented(cfg: &RunConfig, body: &str) -> String {
    let mut s: String = cfg.header().iter().map(|l| format!("# {l}\n")).collect();
    s.push_str(body);
    s
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool_version: &'a str,
    config_hash: String,
    config: &'a RunConfig,
    raw_records: usize,
    cleaned_records: usize,
    biomarkers: &'a Option<Vec<String>>,
    rows: usize,
    train_rows: usize,
    val_rows: usize,
    train_positives: usize,
    val_positives: usize,
    train_fingerprint: String,
    val_fingerprint: String,
}

pub fn cmd_prepare(cfg: &RunConfig, schema: &Schema) -> Result<Prepared> {
    let p = prepare(&load_cohort(cfg, schema)?, schema, cfg)?;
    let out = ensure_out(cfg)?;
    let header = cfg.header();
    p.train.save_csv(&out.join(files::TRAIN), &header)?;
    p.val.save_csv(&out.join(files::VAL), &header)?;
    let prov = Provenance {
        tool_version: TOOL_VERSION,
        config_hash: cfg.config_hash(),
        config: cfg,
        raw_records: p.raw_records,
        cleaned_records: p.cleaned_records,
        biomarkers: &p.biomarkers,
        rows: p.full.len(),
        train_rows: p.train.len(),
        val_rows: p.val.len(),
        train_positives: p.train.labels.positives(),
        val_positives: p.val.labels.positives(),
        train_fingerprint: fingerprint(&p.train),
        val_fingerprint: fingerprint(&p.val),
    };
    write_text(
        &out.join(files::PROVENANCE),
        &(serde_json::to_string_pretty(&prov).expect("provenance serializes") + "\n"),
    )?;
    Ok(p)
}

/// Train with fixed hyperparameters, or grid-search when a grid is set.
pub fn fit(train: &Dataset, cfg: &RunConfig) -> Result<(GBTModel, Option<GridSearchResult>)> {
    let mut outcome = match &cfg.grid {
        Some(grid) => {
            let r = grid_search(train, grid, &cfg.hyperparams, &cfg.cv, cfg.selection)?;
            (r.model.clone(), Some(r))
        }
        None => (train_ensemble(train, &cfg.hyperparams, derive_seed(cfg.seed, "train"))?, None),
    };
    outcome.0.training_meta.tool_version = Some(TOOL_VERSION.into());
    outcome.0.training_meta.config_hash = Some(cfg.config_hash());
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model: GBTModel,
    pub train_accuracy: f64,
    pub grid: Option<GridSearchResult>,
    pub cv: Option<CvReport>,
}

pub fn cmd_train(cfg: &RunConfig, schema: &Schema, train_csv: Option<&Path>, with_cv: bool) -> Result<TrainSummary> {
    let train = match train_csv {
        Some(p) => Dataset::load_csv(p, cfg.task)?,
        None => prepare(&load_cohort(cfg, schema)?, schema, cfg)?.train,
    };
    let (model, grid) = fit(&train, cfg)?;
    let out = ensure_out(cfg)?;
    save_model(&model, &out.join(files::MODEL))?;
    let header = cfg.header();
    if let Some(g) = &grid {
        write_grid_csv(create(&out.join(files::GRID))?, &g.table, &header)?;
    }
    let cv = if with_cv {
        let rep = repeated_stratified_cv(&train, &model.hyperparams, &cfg.cv)?;
        write_cv_csv(create(&out.join(files::CV))?, &rep, &header)?;
        write_text(&out.join(files::CV_SUMMARY), &commented(cfg, &cv_summary(&rep)))?;
        Some(rep)
    } else {
        None
    };
    let train_accuracy = evaluate(&model, &train, cfg.threshold)?.report.accuracy.unwrap_or(f64::NAN);
    let mut log = format!(
        "rows {} positives {}\ntrees {}\ntraining accuracy {:.4}\nhyperparameters {}\n",
        train.len(),
        train.labels.positives(),
        model.trees.len(),
        train_accuracy,
        serde_json::to_string(&model.hyperparams).expect("hyperparameters serialize"),
    );
    if let Some(g) = &grid {
        log.push_str(&format!(
            "grid points {} (failed {})\nbest cv mean f_score {:.4} accuracy {:.4}\n",
            g.table.len(),
            g.table.iter().filter(|p| p.error.is_some()).count(),
            g.best_cv.f_score.mean,
            g.best_cv.accuracy.mean
        ));
    }
    write_text(&out.join(files::TRAIN_LOG), &commented(cfg, &log))?;
    Ok(TrainSummary { model, train_accuracy, grid, cv })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
    pub roc: Curve,
    pub pr: Curve,
    pub threshold: f64,
}

pub fn evaluate(model: &GBTModel, ds: &Dataset, threshold: f64) -> Result<Evaluation> {
    let proba = model.predict_proba_matrix(&ds.matrix)?;
    let labels = &ds.labels.labels;
    let cm = confusion(labels, &threshold_scores(&proba, threshold))?;
    Ok(Evaluation {
        confusion: cm,
        report: scalar_metrics(&cm),
        roc: roc_curve(labels, &proba)?,
        pr: pr_curve(labels, &proba)?,
        threshold,
    })
}

fn model_path(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| cfg.out.join(files::MODEL), Path::to_path_buf)
}

/// The named dataset, or the validation split re-derived from the cohort.
fn dataset_or_val(cfg: &RunConfig, schema: &Schema, dataset: Option<&Path>) -> Result<Dataset> {
    match dataset {
        Some(p) => Dataset::load_csv(p, cfg.task),
        None => Ok(prepare(&load_cohort(cfg, schema)?, schema, cfg)?.val),
    }
}

pub fn write_evaluation(dir: &Path, e: &Evaluation, header: &[String]) -> Result<()> {
    let extra = [("auc_roc", e.roc.auc), ("auc_pr", e.pr.auc), ("threshold", e.threshold)];
    write_metrics_csv(create(&dir.join(files::METRICS))?, &e.confusion, &e.report, &extra, header)?;
    write_curve_csv(create(&dir.join(files::ROC))?, &e.roc, header)?;
    write_curve_csv(create(&dir.join(files::PR))?, &e.pr, header)
}

pub fn cmd_eval(cfg: &RunConfig, schema: &Schema, model: Option<&Path>, dataset: Option<&Path>) -> Result<Evaluation> {
    let model = load_model(&model_path(cfg, model))?;
    let ds = dataset_or_val(cfg, schema, dataset)?;
    let e = evaluate(&model, &ds, cfg.threshold)?;
    write_evaluation(ensure_out(cfg)?, &e, &cfg.header())?;
    Ok(e)
}

#[derive(Debug, Clone)]
pub struct ExplainSummary {
    pub ranking: FeatureRanking,
    pub base_value: f64,
    pub max_additivity_error: f64,
    pub representative: RepresentativeTree,
    pub rows: usize,
}

/// SHAP values over `ds` using the training covers stored in the model.
pub fn explain(model: &GBTModel, ds: &FeatureMatrix) -> Result<(ExplainSummary, Vec<crate::explain::ShapExplanation>)> {
    let explainer = TreeExplainer::from_model(model)?;
    let explanations = explain_rows(&explainer, model, ds)?;
    let ranking = ranking_from_explanations(model, &explanations)?;
    let max_additivity_error = explanations.iter().map(|e| e.additivity_error().abs()).fold(0.0, f64::max);
    Ok((
        ExplainSummary {
            ranking,
            base_value: explainer.base_value(),
            max_additivity_error,
            representative: representative_tree(model)?,
            rows: explanations.len(),
        },
        explanations,
    ))
}

pub fn cmd_explain(
    cfg: &RunConfig,
    schema: &Schema,
    model: Option<&Path>,
    dataset: Option<&Path>,
) -> Result<ExplainSummary> {
    let model = load_model(&model_path(cfg, model))?;
    let ds = dataset_or_val(cfg, schema, dataset)?;
    let aligned = model.align(&ds.matrix)?.into_owned();
    let (summary, explanations) = explain(&model, &aligned)?;
    let out = ensure_out(cfg)?;
    let header = cfg.header();
    write_explanations_csv(
        create(&out.join(files::SHAP_VALUES))?,
        &model.feature_names,
        &aligned,
        &explanations,
        &header,
    )?;
    write_ranking_csv(create(&out.join(files::IMPORTANCE))?, &summary.ranking, &header)?;
    let mut tree_header = header.clone();
    tree_header.push(format!(
        "tree_index={} total_gain={:?}",
        summary.representative.index, summary.representative.total_gain
    ));
    write_tree_csv(create(&out.join(files::TREE))?, &summary.representative.table, &tree_header)?;
    let hash = cfg.config_hash();
    let meta = ExplanationMeta {
        space: "log_odds",
        base_value: summary.base_value,
        n_rows: summary.rows,
        task: cfg.task.as_str(),
        tool_version: TOOL_VERSION,
        seed: cfg.seed,
        config_hash: &hash,
    };
    write_text(&out.join(files::SHAP_META), &explanation_meta_json(&meta))?;
    Ok(summary)
}

/// How the reduced feature set is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ReduceFeatures {
    /// Top `k` by mean |SHAP| of the full model on its training set.
    TopK(usize),
    /// The published top-10 list for the task.
    Published,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub features: Vec<String>,
    pub model: GBTModel,
    pub full: Evaluation,
    pub reduced: Evaluation,
}

/// Retrain on a feature subset with the same hyperparameters and compare on validation.
pub fn reduce(full_model: &GBTModel, p: &Prepared, selection: &ReduceFeatures, cfg: &RunConfig) -> Result<Reduced> {
    let features = match selection {
        ReduceFeatures::TopK(k) => {
            let train = full_model.align(&p.train.matrix)?.into_owned();
            let (summary, _) = explain(full_model, &train)?;
            top_k_features(&summary.ranking, *k)?
        }
        ReduceFeatures::Published => published_reduced_features(cfg.task),
        ReduceFeatures::Explicit(f) => f.clone(),
    };
    let train = p.train.select_columns(&features)?;
    let mut model = train_ensemble(&train, &full_model.hyperparams, derive_seed(cfg.seed, "reduce"))?;
    model.training_meta.tool_version = Some(TOOL_VERSION.into());
    model.training_meta.config_hash = Some(cfg.config_hash());
    Ok(Reduced {
        full: evaluate(full_model, &p.val, cfg.threshold)?,
        reduced: evaluate(&model, &p.val, cfg.threshold)?,
        features,
        model,
    })
}

pub fn cmd_reduce(
    cfg: &RunConfig,
    schema: &Schema,
    model: Option<&Path>,
    selection: &ReduceFeatures,
) -> Result<Reduced> {
    let full_model = load_model(&model_path(cfg, model))?;
    let p = prepare(&load_cohort(cfg, schema)?, schema, cfg)?;
    let r = reduce(&full_model, &p, selection, cfg)?;
    let out = ensure_out(cfg)?;
    write_text(&out.join(files::REDUCED_FEATURES), &commented(cfg, &(r.features.join("\n") + "\n")))?;
    save_model(&r.model, &out.join(files::REDUCED_MODEL))?;
    let mut w = create(&out.join(files::REDUCED_METRICS))?;
    for l in cfg.header() {
        writeln!(w, "# {l}").map_err(|e| Error::io(out.join(files::REDUCED_METRICS), e))?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["metric", "full", "reduced"])?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"));
    for ((name, a), (_, b)) in r.full.report.fields().into_iter().zip(r.reduced.report.fields()) {
        csv.write_record([name.to_string(), fmt(a), fmt(b)])?;
    }
    csv.write_record(["auc_roc".to_string(), format!("{:?}", r.full.roc.auc), format!("{:?}", r.reduced.roc.auc)])?;
    csv.write_record(["auc_pr".to_string(), format!("{:?}", r.full.pr.auc), format!("{:?}", r.reduced.pr.auc)])?;
    csv.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(r)
}

/// Cluster the cleaned task dataset (before the split).
pub fn cmd_cluster(cfg: &RunConfig, schema: &Schema, k: usize) -> Result<ClusterRun> {
    let p = prepare(&load_cohort(cfg, schema)?, schema, cfg)?;
    let kcfg = KPrototypesConfig { k, seed: derive_seed(cfg.seed, "cluster"), ..Default::default() };
    let run = cluster_dataset(&p.full, &kcfg)?;
    let out = ensure_out(cfg)?;
    let mut header = cfg.header();
    header.push(format!("k={k} gamma_mix={:?} cost={:?}", run.assignment.gamma_mix, run.assignment.cost));
    write_assignments_csv(create(&out.join(files::CLUSTERS))?, &p.full, &run.assignment, &header)?;
    write_transform_csv(create(&out.join(files::TRANSFORM))?, &run.transform, &header)?;
    let mut body = String::from("class,");
    body.push_str(&(0..k).map(|c| format!("cluster_{c}")).collect::<Vec<_>>().join(","));
    body.push('\n');
    for (class, row) in run.agreement.counts.iter().enumerate() {
        body.push_str(&format!("{class},{}\n", row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")));
    }
    body.push_str(&format!("# agreement={:?}\n", run.agreement.rate));
    write_text(&out.join(files::AGREEMENT), &commented(cfg, &body))?;
    Ok(run)
}

/// Read a CSV of feature columns (extra columns are ignored) into the model's column order.
pub fn read_feature_rows(text: &str, model: &GBTModel) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut idx = Vec::new();
    let mut missing = Vec::new();
    for name in &model.feature_names {
        match headers.iter().position(|h| h.eq_ignore_ascii_case(name)) {
            Some(i) => idx.push(i),
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema { missing });
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row =
            idx.iter()
                .zip(&model.feature_names)
                .map(|(&i, name)| {
                    rec.get(i).and_then(|c| c.parse::<f64>().ok()).filter(|v| v.is_finite()).ok_or_else(|| {
                        Error::Record { row: r + 1, message: format!("`{name}` is not a finite number") }
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyOutput("no rows to predict".into()));
    }
    FeatureMatrix::from_rows(&rows, model.feature_names.clone(), None)
}

/// `row_id,probability,label` with probabilities printed in round-trip form.
pub fn predictions_csv(model: &GBTModel, rows: &FeatureMatrix, threshold: f64) -> Result<String> {
    let mut s = String::from("row_id,probability,label\n");
    for (i, p) in model.predict_proba_matrix(rows)?.into_iter().enumerate() {
        s.push_str(&format!("{i},{p:?},{}\n", u8::from(p >= threshold)));
    }
    Ok(s)
}
