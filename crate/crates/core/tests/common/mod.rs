//! Independent oracles and fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod props;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use tower::ServiceExt;

use triage::data::{Dataset, FeatureMatrix, Schema, Stratum, Task};
use triage::explain::TreeExplainer;
use triage::gbtree::{
    logistic_grad_hess, logit, train_tree, GBTModel, GradHess, Hyperparams, Node, TrainingMeta, Tree,
};
use triage::pipeline::{self, ReduceFeatures, RunConfig};
use triage::service::{router, Registry};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

// ---------------------------------------------------------------- split finder

pub struct SplitInstance {
    pub matrix: FeatureMatrix,
    pub grad_hess: Vec<GradHess>,
    pub hp: Hyperparams,
}

/// Small integer features (plenty of ties) with dyadic gradients and hessians,
/// so every partial sum is exact whatever the summation order.
pub fn split_instance(r: &mut ChaCha8Rng) -> SplitInstance {
    let n = r.random_range(2..=30);
    let d = r.random_range(1..=4);
    let levels = r.random_range(2..=8);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(0..levels) as f64).collect()).collect();
    let grad_hess = (0..n)
        .map(|_| GradHess { g: r.random_range(-8i32..=8) as f64 / 8.0, h: r.random_range(1i32..=8) as f64 / 8.0 })
        .collect();
    let hp = Hyperparams {
        lambda: [0.0, 0.5, 1.0, 2.0][r.random_range(0..4)],
        gamma: [0.0, 0.0, 0.125, 0.5][r.random_range(0..4)],
        min_child_weight: [0.0, 0.25, 1.0, 2.0][r.random_range(0..4)],
        max_depth: 1,
        ..Hyperparams::default()
    };
    SplitInstance { matrix: FeatureMatrix::from_rows(&rows, names(d), None).unwrap(), grad_hess, hp }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Enumerate every (feature, midpoint) pair, partition the rows directly and
/// score it with the regularized gain. Columns are scanned ascending, then
/// thresholds ascending, and only a strictly larger gain replaces the incumbent.
pub fn brute_force_root_split(inst: &SplitInstance) -> Option<BruteSplit> {
    let SplitInstance { matrix, grad_hess, hp } = inst;
    let score = |g: f64, h: f64| if h + hp.lambda == 0.0 { 0.0 } else { g * g / (h + hp.lambda) };
    let total_g: f64 = grad_hess.iter().map(|x| x.g).sum();
    let total_h: f64 = grad_hess.iter().map(|x| x.h).sum();
    let mut best: Option<BruteSplit> = None;
    for f in 0..matrix.n_cols() {
        let mut values = matrix.column(f);
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut gl, mut hl) = (0.0, 0.0);
            for (i, gh) in grad_hess.iter().enumerate() {
                if matrix.get(i, f) < t {
                    gl += gh.g;
                    hl += gh.h;
                }
            }
            let (gr, hr) = (total_g - gl, total_h - hl);
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(total_g, total_h)) - hp.gamma;
            if gain <= 0.0 || hl < hp.min_child_weight || hr < hp.min_child_weight {
                continue;
            }
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(BruteSplit { feature: f, threshold: t, gain });
            }
        }
    }
    best
}

/// Root of `train_tree` as a split triple, or `None` for a leaf.
pub fn trained_root_split(inst: &SplitInstance) -> Option<BruteSplit> {
    let rows: Vec<usize> = (0..inst.matrix.n_rows()).collect();
    let cols: Vec<usize> = (0..inst.matrix.n_cols()).collect();
    let tree = train_tree(&rows, &cols, &inst.grad_hess, &inst.matrix, &inst.hp).unwrap();
    match tree.nodes[0] {
        Node::Split { feature, threshold, gain, .. } => Some(BruteSplit { feature, threshold, gain }),
        Node::Leaf { .. } => None,
    }
}

// ---------------------------------------------------------------- Shapley values

fn random_subtree(r: &mut ChaCha8Rng, d: usize, depth_left: usize, nodes: &mut Vec<Node>) -> (usize, f64) {
    let id = nodes.len();
    nodes.push(Node::Leaf { leaf_weight: 0.0, cover: 0.0 });
    if depth_left == 0 || r.random_bool(0.25) {
        // roughly one leaf in six is never reached by the background
        let cover = if r.random_bool(0.15) { 0.0 } else { r.random_range(1..=20) as f64 };
        nodes[id] = Node::Leaf { leaf_weight: r.random_range(-2.0..2.0), cover };
        return (id, cover);
    }
    let feature = r.random_range(0..d);
    let threshold = r.random_range(0.05..0.95);
    let (left, cl) = random_subtree(r, d, depth_left - 1, nodes);
    let (right, cr) = random_subtree(r, d, depth_left - 1, nodes);
    nodes[id] = Node::Split {
        feature,
        threshold,
        left,
        right,
        default_direction: triage::gbtree::Direction::Left,
        gain: 1.0,
        cover: cl + cr,
    };
    (id, cl + cr)
}

pub fn random_tree(r: &mut ChaCha8Rng, d: usize, max_depth: usize) -> Tree {
    loop {
        let mut nodes = Vec::new();
        let (_, cover) = random_subtree(r, d, max_depth, &mut nodes);
        if cover > 0.0 {
            return Tree { nodes };
        }
    }
}

fn bare_meta(n_features: usize) -> TrainingMeta {
    TrainingMeta {
        seed: 0,
        data_fingerprint: "0".repeat(64),
        n_rows: 0,
        feature_ranges: vec![triage::gbtree::FeatureRange { min: 0.0, max: 1.0 }; n_features],
        timestamp: None,
        tool_version: None,
        config_hash: None,
    }
}

/// Hand-built ensemble: features may repeat along a path and some branches carry zero cover.
pub fn random_model(r: &mut ChaCha8Rng, max_features: usize, max_trees: usize, max_depth: usize) -> GBTModel {
    let d = r.random_range(1..=max_features);
    let trees = (0..r.random_range(1..=max_trees)).map(|_| random_tree(r, d, max_depth)).collect();
    GBTModel {
        trees,
        hyperparams: Hyperparams {
            learning_rate: r.random_range(0.05..1.0),
            base_score: r.random_range(0.1..0.9),
            ..Hyperparams::default()
        },
        feature_names: names(d),
        task: Task::Mortality,
        training_meta: bare_meta(d),
    }
}

/// Expected tree output when only the features in `mask` are known, averaging
/// the unknown splits by stored cover (even split when a node saw no rows).
fn conditional_value(tree: &Tree, node: usize, row: &[f64], mask: u32) -> f64 {
    match &tree.nodes[node] {
        Node::Leaf { leaf_weight, .. } => *leaf_weight,
        Node::Split { feature, threshold, left, right, cover, .. } => {
            if mask & (1 << feature) != 0 {
                let next = if row[*feature] < *threshold { *left } else { *right };
                conditional_value(tree, next, row, mask)
            } else {
                let (wl, wr) = if *cover > 0.0 {
                    (tree.nodes[*left].cover() / cover, tree.nodes[*right].cover() / cover)
                } else {
                    (0.5, 0.5)
                };
                wl * conditional_value(tree, *left, row, mask) + wr * conditional_value(tree, *right, row, mask)
            }
        }
    }
}

/// `(v(empty set), phi)` from the Shapley formula over all 2^d coalitions.
pub fn enumerated_shapley(model: &GBTModel, row: &[f64]) -> (f64, Vec<f64>) {
    let d = model.n_features();
    assert!(d <= 16);
    let eta = model.hyperparams.learning_rate;
    let v: Vec<f64> = (0..1u32 << d)
        .map(|mask| {
            model
                .trees
                .iter()
                .fold(logit(model.hyperparams.base_score), |acc, t| acc + eta * conditional_value(t, 0, row, mask))
        })
        .collect();
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let phi = (0..d)
        .map(|i| {
            (0..1u32 << d)
                .filter(|s| s & (1 << i) == 0)
                .map(|s| {
                    let k = s.count_ones() as usize;
                    fact(k) * fact(d - k - 1) / fact(d) * (v[(s | (1 << i)) as usize] - v[s as usize])
                })
                .sum()
        })
        .collect();
    (v[0], phi)
}

pub struct ShapCheck {
    pub max_phi_error: f64,
    pub max_base_error: f64,
    pub max_local_rel_error: f64,
}

/// Compare the explainer with enumeration on `rows` random points in [0, 1)^d.
pub fn check_shap(model: &GBTModel, r: &mut ChaCha8Rng, rows: usize) -> ShapCheck {
    let explainer = TreeExplainer::from_model(model).unwrap();
    let mut out = ShapCheck { max_phi_error: 0.0, max_base_error: 0.0, max_local_rel_error: 0.0 };
    for _ in 0..rows {
        let row: Vec<f64> = (0..model.n_features()).map(|_| r.random::<f64>()).collect();
        let e = explainer.explain(&row).unwrap();
        let (base, phi) = enumerated_shapley(model, &row);
        for (a, b) in e.contributions.iter().zip(&phi) {
            out.max_phi_error = out.max_phi_error.max((a - b).abs());
        }
        out.max_base_error = out.max_base_error.max((e.base_value - base).abs());
        let margin = model.predict_margin(&row).unwrap();
        let rel = e.additivity_error().abs() / margin.abs().max(1.0);
        out.max_local_rel_error = out.max_local_rel_error.max(rel);
    }
    out
}

// ---------------------------------------------------------------- datasets

/// Labels drawn from a logistic model on the first two of `d` uniform features.
pub fn noisy_dataset(r: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let mut rows = Vec::with_capacity(n);
    let mut strata = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..d).map(|_| r.random_range(0.0..1.0)).collect();
        let z = 4.0 * (row[0] - 0.5) + if d > 1 { 2.0 * (row[1] - 0.5) } else { 0.0 };
        // the first two rows fix both classes
        let dead = match i {
            0 => true,
            1 => false,
            _ => r.random_bool(1.0 / (1.0 + (-z).exp())),
        };
        rows.push(row);
        strata.push(if dead { Stratum::Dead } else { Stratum::Mild });
    }
    Dataset::new(FeatureMatrix::from_rows(&rows, names(d), Some(strata)).unwrap(), Task::Mortality)
}

/// Hessian mass reaching each node of `tree`, replaying the margins before it.
pub fn hessian_mass(tree: &Tree, ds: &Dataset, margins: &[f64]) -> Vec<f64> {
    let mut mass = vec![0.0; tree.nodes.len()];
    for (i, row) in ds.matrix.rows().enumerate() {
        let h = logistic_grad_hess(margins[i], ds.labels.labels[i]).h;
        let mut k = 0;
        loop {
            mass[k] += h;
            match &tree.nodes[k] {
                Node::Leaf { .. } => break,
                Node::Split { feature, threshold, left, right, .. } => {
                    k = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
    mass
}

// ---------------------------------------------------------------- AUC

/// Scores on a coarse grid (many ties) mixed with continuous draws.
pub fn auc_fixture(r: &mut ChaCha8Rng, n: usize) -> (Vec<u8>, Vec<f64>) {
    let prevalence = r.random_range(0.1..0.9);
    let coarse = r.random_range(2..=25);
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(prevalence))).collect();
    labels[0] = 1;
    labels[1] = 0;
    let scores = labels
        .iter()
        .map(|&y| {
            let shift = if y == 1 { 0.15 } else { 0.0 };
            if r.random_bool(0.6) {
                ((r.random_range(0.0..1.0) + shift) * coarse as f64).floor() / coarse as f64
            } else {
                r.random_range(0.0..1.0) + shift
            }
        })
        .collect();
    (labels, scores)
}

/// Probability a random positive outranks a random negative, ties counting one half.
pub fn mann_whitney_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let pos: Vec<f64> = labels.iter().zip(scores).filter(|(y, _)| **y == 1).map(|(_, s)| *s).collect();
    let neg: Vec<f64> = labels.iter().zip(scores).filter(|(y, _)| **y == 0).map(|(_, s)| *s).collect();
    let mut twice_wins: u64 = 0;
    for p in &pos {
        for q in &neg {
            twice_wins += if p > q {
                2
            } else if p == q {
                1
            } else {
                0
            };
        }
    }
    twice_wins as f64 / (2 * pos.len() * neg.len()) as f64
}

// ---------------------------------------------------------------- pipeline runs

pub struct TaskRun {
    pub prepared: pipeline::Prepared,
    pub model: GBTModel,
    pub eval: pipeline::Evaluation,
}

pub fn run_task(task: Task, seed: u64) -> TaskRun {
    run_task_on(task, seed, None)
}

/// Full pipeline on `data` (the bundled cohort when `None`) with the task preset.
pub fn run_task_on(task: Task, seed: u64, data: Option<&std::path::Path>) -> TaskRun {
    let schema = Schema::bundled();
    let mut cfg = RunConfig::new(task);
    cfg.seed = seed;
    cfg.data = data.map(|p| p.to_path_buf());
    let cohort = pipeline::load_cohort(&cfg, &schema).unwrap();
    let prepared = pipeline::prepare(&cohort, &schema, &cfg).unwrap();
    let (model, _) = pipeline::fit(&prepared.train, &cfg).unwrap();
    let eval = pipeline::evaluate(&model, &prepared.val, cfg.threshold).unwrap();
    TaskRun { prepared, model, eval }
}

// ---------------------------------------------------------------- service

/// The four service models trained on the bundled cohort, reduced ones on the published lists.
pub fn service_models(seed: u64) -> Vec<(String, GBTModel)> {
    let mut out = Vec::new();
    for task in [Task::Mortality, Task::Severity] {
        let run = run_task(task, seed);
        let mut cfg = RunConfig::new(task);
        cfg.seed = seed;
        let reduced = pipeline::reduce(&run.model, &run.prepared, &ReduceFeatures::Published, &cfg).unwrap();
        out.push((task.as_str().to_string(), run.model));
        out.push((format!("{}_reduced", task.as_str()), reduced.model));
    }
    out
}

pub fn service_router(models: Vec<(String, GBTModel)>) -> axum::Router {
    router(Arc::new(Registry::from_models(models, &Schema::bundled())), None)
}

/// A well-formed body for `id` using the midpoint of every training range.
pub fn valid_request(id: &str, model: &GBTModel) -> Value {
    let features: Map<String, Value> = model
        .feature_names
        .iter()
        .zip(&model.training_meta.feature_ranges)
        .map(|(n, r)| (n.clone(), json!((r.min + r.max) / 2.0)))
        .collect();
    json!({ "model": id, "features": features })
}

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub kind: &'static str,
    pub method: Method,
    pub uri: String,
    pub content_type: Option<&'static str>,
    pub body: Vec<u8>,
}

fn case(kind: &'static str, body: Vec<u8>) -> FuzzCase {
    FuzzCase { kind, method: Method::POST, uri: "/predict".into(), content_type: Some("application/json"), body }
}

fn junk_value(r: &mut ChaCha8Rng) -> Value {
    match r.random_range(0..6) {
        0 => Value::Null,
        1 => json!("12.5"),
        2 => json!(true),
        3 => json!([1.0]),
        4 => json!({ "value": 1.0 }),
        _ => json!(""),
    }
}

/// One malformed request; every variant is invalid by construction.
pub fn malformed(r: &mut ChaCha8Rng, valid: &Value) -> FuzzCase {
    let text = valid.to_string();
    let features = valid["features"].as_object().unwrap();
    let keys: Vec<&String> = features.keys().collect();
    let pick = |r: &mut ChaCha8Rng| keys[r.random_range(0..keys.len())].clone();
    let with_features = |f: Map<String, Value>| {
        let mut v = valid.clone();
        v["features"] = Value::Object(f);
        v.to_string().into_bytes()
    };
    match r.random_range(0..20) {
        0 => {
            let n = r.random_range(0..200);
            case("random_bytes", (0..n).map(|_| r.random::<u8>()).collect())
        }
        1 => {
            let cut = r.random_range(0..text.len());
            case("truncated", text.as_bytes()[..cut].to_vec())
        }
        2 => {
            let v = [json!(null), json!(3), json!("predict"), json!([valid.clone()]), json!(true)]
                [r.random_range(0..5)]
            .clone();
            case("not_an_object", v.to_string().into_bytes())
        }
        3 => {
            let mut f = features.clone();
            f.remove(&pick(r));
            case("missing_feature", with_features(f))
        }
        4 => {
            let mut f = features.clone();
            f.insert(format!("Unknown marker {}", r.random_range(0..1000)), json!(1.0));
            case("extra_feature", with_features(f))
        }
        5 => {
            let mut f = features.clone();
            let k = pick(r);
            f.insert(k, junk_value(r));
            case("wrong_type_feature", with_features(f))
        }
        6 => {
            let k = pick(r);
            let needle = format!("\"{k}\":");
            let at = text.find(&needle).unwrap() + needle.len();
            let end = at + text[at..].find([',', '}']).unwrap();
            let lit = ["1e999", "-1e999", "NaN", "Infinity", "0x10", "1.2.3", "--1"][r.random_range(0..7)];
            case("bad_number", format!("{}{}{}", &text[..at], lit, &text[end..]).into_bytes())
        }
        7 => {
            let mut v = valid.clone();
            v["model"] = json!(["nope", "mortality_v2", "", "MORTALITY", "severity reduced"][r.random_range(0..5)]);
            case("unknown_model", v.to_string().into_bytes())
        }
        8 => {
            let mut v = valid.clone();
            v["model"] = junk_value(r);
            case("model_wrong_type", v.to_string().into_bytes())
        }
        9 => {
            let mut v = valid.clone();
            v.as_object_mut().unwrap().remove(["model", "features"][r.random_range(0..2)]);
            case("missing_field", v.to_string().into_bytes())
        }
        10 => {
            let mut v = valid.clone();
            v[format!("extra_{}", r.random_range(0..100))] = json!(1);
            case("unknown_field", v.to_string().into_bytes())
        }
        11 => {
            let mut v = valid.clone();
            v["threshold"] =
                [json!(-0.1), json!(1.5), json!("0.5"), json!(null), json!(1e300)][r.random_range(0..5)].clone();
            case("bad_threshold", v.to_string().into_bytes())
        }
        12 => {
            let mut v = valid.clone();
            v["features"] = [json!([]), json!("all"), json!(null), json!(7)][r.random_range(0..4)].clone();
            case("features_wrong_type", v.to_string().into_bytes())
        }
        13 => {
            let depth = r.random_range(200..5000);
            case("deep_nesting", format!("{}{}", "[".repeat(depth), "]".repeat(depth)).into_bytes())
        }
        14 => {
            let mut body = text.clone().into_bytes();
            body.truncate(body.len() - 1);
            body.extend(std::iter::repeat_n(b' ', triage::service::MAX_BODY_BYTES + 1));
            body.push(b'}');
            case("oversized", body)
        }
        15 => {
            let mut c = case("wrong_content_type", text.into_bytes());
            c.content_type =
                [None, Some("text/plain"), Some("application/x-www-form-urlencoded")][r.random_range(0..3)];
            c
        }
        16 => {
            let mut body = text.into_bytes();
            let at = body.iter().position(|&b| b == b'"').unwrap() + 1;
            body.insert(at, [0xff, 0xc3, 0x80][r.random_range(0..3)]);
            case("invalid_utf8", body)
        }
        17 => {
            let mut c = case("bad_explain_flag", text.into_bytes());
            c.uri = format!("/predict?explain={}", ["yes", "2", "", "TRUE%20", "maybe"][r.random_range(0..5)]);
            c
        }
        18 => {
            let mut f = Map::new();
            for (i, k) in keys.iter().enumerate() {
                if i % 2 == 0 {
                    f.insert((*k).clone(), features[*k].clone());
                } else {
                    f.insert(k.to_uppercase() + "_", json!(0));
                }
            }
            case("renamed_features", with_features(f))
        }
        _ => {
            let mut c = case("wrong_method", text.into_bytes());
            c.method = [Method::GET, Method::PUT, Method::DELETE][r.random_range(0..3)].clone();
            c
        }
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

pub async fn send(app: &axum::Router, c: &FuzzCase) -> Reply {
    let mut req = Request::builder().method(c.method.clone()).uri(&c.uri);
    if let Some(ct) = c.content_type {
        req = req.header(header::CONTENT_TYPE, ct);
    }
    let resp = app.clone().oneshot(req.body(Body::from(c.body.clone())).unwrap()).await.unwrap();
    let status = resp.status();
    let content_type = resp.headers().get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).map(str::to_string);
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, body }
}

/// A 4xx reply with `{"error": {"code": <string>, "message": <string>}}`.
pub fn is_structured_client_error(r: &Reply) -> bool {
    if !r.status.is_client_error() || !r.content_type.as_deref().is_some_and(|c| c.starts_with("application/json")) {
        return false;
    }
    let Ok(v) = serde_json::from_slice::<Value>(&r.body) else {
        return false;
    };
    v["error"]["code"].is_string() && v["error"]["message"].is_string()
}

pub fn post_json(uri: &str, body: &Value) -> FuzzCase {
    let mut c = case("valid", body.to_string().into_bytes());
    c.uri = uri.into();
    c
}
