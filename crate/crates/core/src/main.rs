use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use triage::data::{Schema, Task};
use triage::gbtree::{load_model, save_model};
use triage::metrics::SelectionRule;
use triage::pipeline::{self, files, ConfigLayer, ReduceFeatures, RunConfig};
use triage::service::{self, ServeConfig};
use triage::{Error, Result};

#[derive(Parser)]
#[command(name = "triage", version, about = "Boosted-tree COVID-19 triage models with TreeSHAP explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, encode, balance and split the cohort; writes train.csv, val.csv, provenance.json.
    Prepare(Common),
    /// Train a model (or grid-search one); writes model.json and train_log.txt.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training CSV from `prepare`; defaults to re-deriving the split.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Also run repeated stratified cross-validation on the training set.
        #[arg(long)]
        cv: bool,
    },
    /// Score a model; writes metrics.csv, roc.csv, pr.csv.
    Eval(ModelArgs),
    /// TreeSHAP values, importance ranking and representative tree.
    Explain(ModelArgs),
    /// Retrain on the top features and compare with the full model.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Full model file (default: <out>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Number of top-ranked features to keep.
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// `published` for the published list, or a comma-separated list of names.
        #[arg(long)]
        features: Option<String>,
    },
    /// Yeo-Johnson transform plus k-prototypes on the cleaned cohort.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Number of clusters.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Train all four service models into one directory.
    Bundle {
        #[command(flatten)]
        common: Common,
        /// Use the published reduced feature lists instead of the top-10 by SHAP.
        #[arg(long)]
        published_features: bool,
    },
    /// Score a feature CSV; prints row_id,probability,label.
    Predict {
        /// Model file written by `train`, `reduce` or `bundle`.
        #[arg(long)]
        model: PathBuf,
        /// CSV with one column per model feature.
        #[arg(long)]
        input: PathBuf,
        /// Probability at or above which a row is labelled 1.
        #[arg(long, default_value_t = service::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Write here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// HTTP prediction service (flags override TRIAGE_* variables).
    Serve {
        /// Bind address (default 127.0.0.1).
        #[arg(long)]
        host: Option<String>,
        /// Port (default 8080).
        #[arg(long)]
        port: Option<u16>,
        /// Directory of `*.json` model files, one per model id (default `models`).
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file of settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `mortality` or `severity`.
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    /// Raw cohort CSV (default: the bundled synthetic cohort).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Master seed; every randomized stage derives its own from it.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file of booster hyperparameters; unset keys take the booster defaults.
    #[arg(long, conflicts_with = "grid")]
    hyperparams: Option<PathBuf>,
    /// TOML `[grid]` table of candidate values; enables grid search.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Grid winner rule: `f_score` or `accuracy`.
    #[arg(long, value_parser = parse_selection)]
    selection: Option<SelectionRule>,
    /// Validation share of each stratum.
    #[arg(long)]
    val_fraction: Option<f64>,
    /// `mild=55,moderate=55,severe=55`, or the preset `default` / `published`.
    #[arg(long)]
    undersample: Option<String>,
    /// Output directory (default: `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Probability cut-off for labels and scalar metrics.
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads for grid search and cross-validation.
    #[arg(long)]
    jobs: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Cross-validation repeats.
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[command(flatten)]
    common: Common,
    /// Model file (default: <out>/model.json).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Encoded dataset CSV (default: the validation split).
    #[arg(long)]
    dataset: Option<PathBuf>,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse::<Task>().map_err(|e| e.to_string())
}

fn parse_selection(s: &str) -> std::result::Result<SelectionRule, String> {
    match s {
        "f_score" | "f" => Ok(SelectionRule::FScore),
        "accuracy" => Ok(SelectionRule::Accuracy),
        _ => Err(format!("unknown selection rule `{s}` (f_score, accuracy)")),
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => ConfigLayer::load(p)?,
            None => ConfigLayer::default(),
        };
        let flags = ConfigLayer {
            task: self.task,
            data: self.data.clone(),
            seed: self.seed,
            hyperparams: self.hyperparams.clone(),
            grid: self.grid.clone(),
            selection: self.selection,
            val_fraction: self.val_fraction,
            undersample: self.undersample.clone(),
            out: self.out.clone(),
            threshold: self.threshold,
            jobs: self.jobs,
            folds: self.folds,
            repeats: self.repeats,
            ..Default::default()
        };
        let cfg = file.overlay(flags).resolve()?;
        if let Some(p) = &cfg.data {
            if !p.exists() {
                return Err(Error::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        if let Some(j) = cfg.jobs {
            // A second call would fail only if a pool already exists; the first setting wins.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
        }
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.4}"))
}

fn print_eval(e: &pipeline::Evaluation) {
    for (name, v) in e.report.fields() {
        println!("{name:<12} {}", fmt_opt(v));
    }
    println!("{:<12} {:.4}", "auc_roc", e.roc.auc);
    println!("{:<12} {:.4}", "auc_pr", e.pr.auc);
}

fn run(cli: Cli) -> Result<()> {
    let schema = Schema::bundled();
    match cli.command {
        Command::Prepare(common) => {
            let cfg = common.resolve()?;
            let p = pipeline::cmd_prepare(&cfg, &schema)?;
            println!("{}", cfg.describe());
            println!("train {} rows ({} positive)", p.train.len(), p.train.labels.positives());
            println!("val {} rows ({} positive)", p.val.len(), p.val.labels.positives());
            println!("wrote {}", cfg.out.display());
        }
        Command::Train { common, dataset, cv } => {
            let cfg = common.resolve()?;
            let s = pipeline::cmd_train(&cfg, &schema, dataset.as_deref(), cv)?;
            if let Some(g) = &s.grid {
                println!("best parameters {}", serde_json::to_string(&g.best).expect("parameters serialize"));
            }
            println!("training accuracy {:.4}", s.train_accuracy);
            if let Some(rep) = &s.cv {
                print!("{}", triage::metrics::cv_summary(rep));
            }
            println!("wrote {}", cfg.out.join(files::MODEL).display());
        }
        Command::Eval(a) => {
            let cfg = a.common.resolve()?;
            let e = pipeline::cmd_eval(&cfg, &schema, a.model.as_deref(), a.dataset.as_deref())?;
            print_eval(&e);
        }
        Command::Explain(a) => {
            let cfg = a.common.resolve()?;
            let s = pipeline::cmd_explain(&cfg, &schema, a.model.as_deref(), a.dataset.as_deref())?;
            println!(
                "rows {} base_value {:.6} max local-accuracy error {:.3e}",
                s.rows, s.base_value, s.max_additivity_error
            );
            for (i, (name, v)) in s.ranking.entries.iter().take(10).enumerate() {
                println!("{:>2}. {name} {v:.4}", i + 1);
            }
        }
        Command::Reduce { common, model, k, features } => {
            let cfg = common.resolve()?;
            let sel = match features.as_deref() {
                None => ReduceFeatures::TopK(k),
                Some("published") => ReduceFeatures::Published,
                Some(list) => ReduceFeatures::Explicit(list.split(',').map(|s| s.trim().to_string()).collect()),
            };
            let r = pipeline::cmd_reduce(&cfg, &schema, model.as_deref(), &sel)?;
            println!("features {}", r.features.join(", "));
            println!("auc_roc full {:.4} reduced {:.4}", r.full.roc.auc, r.reduced.roc.auc);
            println!(
                "accuracy full {} reduced {}",
                fmt_opt(r.full.report.accuracy),
                fmt_opt(r.reduced.report.accuracy)
            );
        }
        Command::Cluster { common, k } => {
            let mut common = common;
            common.task.get_or_insert(Task::Severity);
            let cfg = common.resolve()?;
            let run = pipeline::cmd_cluster(&cfg, &schema, k)?;
            println!("cost {:.4} agreement {:.4}", run.assignment.cost, run.agreement.rate);
        }
        Command::Bundle { common, published_features } => bundle(&common, &schema, published_features)?,
        Command::Predict { model, input, threshold, output } => {
            let m = load_model(&model)?;
            let text = std::fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
            let rows = pipeline::read_feature_rows(&text, &m)?;
            let csv = pipeline::predictions_csv(&m, &rows, threshold)?;
            match output {
                Some(p) => std::fs::write(&p, csv).map_err(|e| Error::io(&p, e))?,
                None => print!("{csv}"),
            }
        }
        Command::Serve { host, port, model_dir } => {
            let mut cfg = ServeConfig::from_env()?;
            cfg.host = host.unwrap_or(cfg.host);
            cfg.port = port.unwrap_or(cfg.port);
            cfg.model_dir = model_dir.unwrap_or(cfg.model_dir);
            init_logging();
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Service(e.to_string()))?;
            rt.block_on(service::serve(cfg, &schema))?;
        }
    }
    Ok(())
}

/// Full and reduced models for both tasks, named by service model id.
fn bundle(common: &Common, schema: &Schema, published_features: bool) -> Result<()> {
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(service::DEFAULT_MODEL_DIR));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    for task in [Task::Mortality, Task::Severity] {
        let mut c = common.clone();
        c.task = Some(task);
        c.out = Some(out.clone());
        let cfg = c.resolve()?;
        let p = pipeline::prepare(&pipeline::load_cohort(&cfg, schema)?, schema, &cfg)?;
        let (model, _) = pipeline::fit(&p.train, &cfg)?;
        let sel = if published_features { ReduceFeatures::Published } else { ReduceFeatures::TopK(10) };
        let r = pipeline::reduce(&model, &p, &sel, &cfg)?;
        let full_path = out.join(format!("{}.json", task.as_str()));
        let reduced_path = out.join(format!("{}_reduced.json", task.as_str()));
        save_model(&model, &full_path)?;
        save_model(&r.model, &reduced_path)?;
        report_bundled(&full_path, r.full.roc.auc);
        report_bundled(&reduced_path, r.reduced.roc.auc);
    }
    Ok(())
}

fn report_bundled(path: &Path, auc: f64) {
    println!("wrote {} (validation auc_roc {auc:.4})", path.display());
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
