use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{format_targets, parse_targets, StratumTargets, Task, DEFAULT_MIN_COVERAGE};
use crate::error::{Error, Result};
use crate::gbtree::Hyperparams;
use crate::metrics::{parse_grid, CvConfig, Grid, SelectionRule};

pub const TOOL_VERSION: &str = concat!("triage ", env!("CARGO_PKG_VERSION"));

/// Validation share giving 302/73 on 375 mortality rows.
pub const MORTALITY_VAL_FRACTION: f64 = 73.0 / 375.0;
/// Validation share giving 264/67 on 331 severity rows.
pub const SEVERITY_VAL_FRACTION: f64 = 67.0 / 331.0;

/// Named undersampling presets accepted wherever targets are.
pub fn undersample_preset(name: &str) -> Option<StratumTargets> {
    match name {
        "default" => Some(crate::data::default_undersample_targets()),
        // 205 alive patients, matching the published 302/73 split sizes
        "published" => parse_targets("mild=75,moderate=75,severe=55").ok(),
        _ => None,
    }
}

pub fn parse_undersample(spec: &str) -> Result<StratumTargets> {
    undersample_preset(spec.trim()).map_or_else(|| parse_targets(spec), Ok)
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    /// Raw cohort CSV; `None` means the bundled synthetic cohort.
    pub data: Option<PathBuf>,
    pub seed: u64,
    pub hyperparams: Hyperparams,
    pub grid: Option<Grid>,
    pub selection: SelectionRule,
    pub val_fraction: f64,
    pub undersample: StratumTargets,
    /// Not part of the recorded configuration: where artifacts go changes none of them.
    #[serde(skip)]
    pub out: PathBuf,
    pub threshold: f64,
    #[serde(skip)]
    pub jobs: Option<usize>,
    pub cv: CvConfig,
    pub min_coverage: f64,
    pub include_symptoms: bool,
}

impl RunConfig {
    pub fn new(task: Task) -> RunConfig {
        RunConfig {
            task,
            data: None,
            seed: 0,
            hyperparams: match task {
                Task::Mortality => Hyperparams::mortality_preset(),
                Task::Severity => Hyperparams::severity_preset(),
            },
            grid: None,
            selection: SelectionRule::default(),
            val_fraction: match task {
                Task::Mortality => MORTALITY_VAL_FRACTION,
                Task::Severity => SEVERITY_VAL_FRACTION,
            },
            undersample: crate::data::default_undersample_targets(),
            out: PathBuf::from("out"),
            threshold: 0.5,
            jobs: None,
            cv: CvConfig::default(),
            min_coverage: DEFAULT_MIN_COVERAGE,
            include_symptoms: false,
        }
    }

    /// Short SHA-256 of the canonical JSON form, ignoring the output directory and job count.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// Comment lines every artifact starts with.
    pub fn header(&self) -> Vec<String> {
        vec![
            TOOL_VERSION.to_string(),
            format!("task={}", self.task),
            format!("seed={}", self.seed),
            format!("config_hash={}", self.config_hash()),
        ]
    }

    pub fn describe(&self) -> String {
        format!(
            "task={} seed={} val_fraction={:.6} undersample={} threshold={}",
            self.task,
            self.seed,
            self.val_fraction,
            format_targets(&self.undersample),
            self.threshold
        )
    }
}

/// Every setting as optional, for config files and command-line overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub task: Option<Task>,
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Path to a TOML file of hyperparameters.
    pub hyperparams: Option<PathBuf>,
    /// Path to a TOML grid file.
    pub grid: Option<PathBuf>,
    pub selection: Option<SelectionRule>,
    pub val_fraction: Option<f64>,
    pub undersample: Option<String>,
    pub out: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub jobs: Option<usize>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub min_coverage: Option<f64>,
    pub include_symptoms: Option<bool>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<ConfigLayer> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<ConfigLayer> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// `self` with every value set in `top` replacing it.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigLayer { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(
            task,
            data,
            seed,
            hyperparams,
            grid,
            selection,
            val_fraction,
            undersample,
            out,
            threshold,
            jobs,
            folds,
            repeats,
            min_coverage,
            include_symptoms
        )
    }

    pub fn resolve(self) -> Result<RunConfig> {
        let task = self.task.ok_or_else(|| Error::Config("--task is required".into()))?;
        let mut cfg = RunConfig::new(task);
        cfg.data = self.data;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = &self.hyperparams {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            cfg.hyperparams = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            cfg.hyperparams.validate()?;
        }
        if let Some(p) = &self.grid {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            cfg.grid = Some(parse_grid(&text)?);
        }
        if let Some(r) = self.selection {
            cfg.selection = r;
        }
        if let Some(v) = self.val_fraction {
            cfg.val_fraction = v;
        }
        if let Some(u) = &self.undersample {
            cfg.undersample = parse_undersample(u)?;
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("threshold must lie in [0, 1], got {t}")));
            }
            cfg.threshold = t;
        }
        cfg.jobs = self.jobs;
        if let Some(f) = self.folds {
            cfg.cv.folds = f;
        }
        if let Some(r) = self.repeats {
            cfg.cv.repeats = r;
        }
        cfg.cv.threshold = cfg.threshold;
        cfg.cv.seed = crate::rng::derive_seed(cfg.seed, "cv");
        if let Some(m) = self.min_coverage {
            cfg.min_coverage = m;
        }
        if let Some(s) = self.include_symptoms {
            cfg.include_symptoms = s;
        }
        Ok(cfg)
    }
}
