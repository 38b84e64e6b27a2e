//! HTTP prediction service over a directory of model files.
//!
//! Endpoints: `POST /predict[?explain=true]`, `GET /models`,
//! `GET /models/{id}/manifest`, `GET /health`. Every error body has the shape
//! `{"error": {"code": ..., "message": ...}}`, plus feature lists for 422s.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use axum::body::to_bytes;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::data::Schema;
use crate::error::{Error, Result};
use crate::explain::TreeExplainer;
use crate::gbtree::{load_model, GBTModel, FORMAT_NAME, FORMAT_VERSION};

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_MODEL_DIR: &str = "models";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Request bodies above this size are rejected with 413.
pub const MAX_BODY_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFeature {
    pub name: String,
    pub unit: Option<String>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug)]
pub struct LoadedModel {
    pub id: String,
    pub version: String,
    pub model: GBTModel,
    pub manifest: Vec<ManifestFeature>,
}

impl LoadedModel {
    pub fn new(id: &str, model: GBTModel, schema: &Schema) -> Self {
        let fp = &model.training_meta.data_fingerprint;
        let version = format!("{FORMAT_NAME}/{FORMAT_VERSION}+{}", &fp[..fp.len().min(12)]);
        let manifest = model
            .feature_names
            .iter()
            .zip(&model.training_meta.feature_ranges)
            .map(|(name, r)| ManifestFeature {
                name: name.clone(),
                unit: schema.unit_of(name).map(str::to_string),
                min: r.min,
                max: r.max,
            })
            .collect();
        LoadedModel { id: id.to_string(), version, model, manifest }
    }
}

/// Immutable set of models keyed by id (the model file stem).
#[derive(Debug, Default)]
pub struct Registry {
    pub models: BTreeMap<String, LoadedModel>,
}

impl Registry {
    /// Load every `<id>.json` in `dir`. Any unreadable model aborts with its file name.
    pub fn load_dir(dir: &Path, schema: &Schema) -> Result<Registry> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut models = BTreeMap::new();
        for path in paths {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let model = load_model(&path).map_err(|e| Error::Service(format!("{}: {e}", path.display())))?;
            models.insert(id.clone(), LoadedModel::new(&id, model, schema));
        }
        if models.is_empty() {
            return Err(Error::Service(format!("no model files in {}", dir.display())));
        }
        Ok(Registry { models })
    }

    pub fn from_models(models: impl IntoIterator<Item = (String, GBTModel)>, schema: &Schema) -> Registry {
        Registry { models: models.into_iter().map(|(id, m)| (id.clone(), LoadedModel::new(&id, m, schema))).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub model_dir: PathBuf,
    /// When set, every request needs `Authorization: Bearer <token>`.
    pub token: Option<String>,
}

impl ServeConfig {
    /// Read `TRIAGE_HOST`, `TRIAGE_PORT`, `TRIAGE_MODEL_DIR` and `TRIAGE_TOKEN`.
    pub fn from_env() -> Result<ServeConfig> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let port = match var("TRIAGE_PORT") {
            Some(p) => p.parse().map_err(|_| Error::Config(format!("TRIAGE_PORT `{p}` is not a port")))?,
            None => DEFAULT_PORT,
        };
        Ok(ServeConfig {
            host: var("TRIAGE_HOST").unwrap_or_else(|| DEFAULT_HOST.into()),
            port,
            model_dir: var("TRIAGE_MODEL_DIR").map_or_else(|| PathBuf::from(DEFAULT_MODEL_DIR), PathBuf::from),
            token: var("TRIAGE_TOKEN"),
        })
    }
}

#[derive(Clone)]
struct AppState {
    registry: Arc<Registry>,
    token: Option<Arc<str>>,
}

fn error_response(
    status: StatusCode,
    code: &str,
    message: impl Into<String>,
    extra: Option<Map<String, Value>>,
) -> Response {
    let mut err = Map::new();
    err.insert("code".into(), code.into());
    err.insert("message".into(), message.into().into());
    if let Some(extra) = extra {
        err.extend(extra);
    }
    (status, axum::Json(json!({ "error": err }))).into_response()
}

pub fn router(registry: Arc<Registry>, token: Option<String>) -> Router {
    let state = AppState { registry, token: token.map(Arc::from) };
    Router::new()
        .route("/predict", post(predict))
        .route("/models", get(list_models))
        .route("/models/{id}/manifest", get(manifest))
        .route("/health", get(health))
        .fallback(|| async { error_response(StatusCode::NOT_FOUND, "not_found", "no such endpoint", None) })
        .method_not_allowed_fallback(|| async {
            error_response(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed", None)
        })
        .layer(middleware::from_fn_with_state(state.clone(), guard))
        .with_state(state)
}

/// Bearer-token check and request logging (method, path, status, latency only).
async fn guard(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let started = Instant::now();
    let method = request.method().clone();
    let path = request.uri().path().to_string();
    let response = match &state.token {
        Some(token) => {
            let expected = format!("Bearer {token}");
            let ok = request.headers().get(header::AUTHORIZATION).is_some_and(|v| v.as_bytes() == expected.as_bytes());
            if ok {
                next.run(request).await
            } else {
                error_response(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token", None)
            }
        }
        None => next.run(request).await,
    };
    tracing::info!(%method, %path, status = response.status().as_u16(), micros = started.elapsed().as_micros() as u64, "request");
    response
}

async fn health(State(state): State<AppState>) -> Response {
    let ids: Vec<&String> = state.registry.models.keys().collect();
    axum::Json(json!({ "status": "ok", "models": ids.len(), "model_ids": ids })).into_response()
}

async fn list_models(State(state): State<AppState>) -> Response {
    let list: Vec<Value> = state
        .registry
        .models
        .values()
        .map(|m| {
            json!({
                "id": m.id,
                "version": m.version,
                "task": m.model.task,
                "n_features": m.model.n_features(),
            })
        })
        .collect();
    axum::Json(json!({ "models": list })).into_response()
}

async fn manifest(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match state.registry.models.get(&id) {
        Some(m) => axum::Json(json!({
            "id": m.id,
            "version": m.version,
            "task": m.model.task,
            "positive_class": m.model.task.positive_class_name(),
            "threshold": DEFAULT_THRESHOLD,
            "features": m.manifest,
        }))
        .into_response(),
        None => unknown_model(&id),
    }
}

fn unknown_model(id: &str) -> Response {
    error_response(StatusCode::NOT_FOUND, "unknown_model", format!("no model `{id}`"), None)
}

// the error is the finished response, returned once per request
#[allow(clippy::result_large_err)]
fn explain_flag(query: Option<&str>) -> std::result::Result<bool, Response> {
    let mut flag = false;
    for pair in query.unwrap_or_default().split('&').filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').unwrap_or((pair, "true"));
        if k == "explain" {
            flag = match v {
                "true" | "1" => true,
                "false" | "0" => false,
                _ => {
                    return Err(error_response(
                        StatusCode::BAD_REQUEST,
                        "bad_query",
                        "explain must be true or false",
                        None,
                    ))
                }
            };
        }
    }
    Ok(flag)
}

fn bad_request(message: impl Into<String>) -> Response {
    error_response(StatusCode::BAD_REQUEST, "malformed_request", message, None)
}

/// Parsed and validated request.
struct Checked<'a> {
    model: &'a LoadedModel,
    row: Vec<f64>,
    threshold: f64,
}

#[allow(clippy::result_large_err)]
fn check_request<'a>(registry: &'a Registry, body: &[u8]) -> std::result::Result<Checked<'a>, Response> {
    let value: Value = serde_json::from_slice(body).map_err(|e| bad_request(format!("body is not valid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| bad_request("body must be a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "model" | "features" | "threshold")) {
        return Err(bad_request(format!("unknown field `{k}`")));
    }
    let id = obj
        .get("model")
        .ok_or_else(|| bad_request("missing field `model`"))?
        .as_str()
        .ok_or_else(|| bad_request("`model` must be a string"))?;
    let features = obj
        .get("features")
        .ok_or_else(|| bad_request("missing field `features`"))?
        .as_object()
        .ok_or_else(|| bad_request("`features` must be an object"))?;
    let threshold = match obj.get("threshold") {
        None => DEFAULT_THRESHOLD,
        Some(t) => t
            .as_f64()
            .filter(|t| (0.0..=1.0).contains(t))
            .ok_or_else(|| bad_request("`threshold` must be a number in [0, 1]"))?,
    };
    let model = registry.models.get(id).ok_or_else(|| unknown_model(id))?;

    let names = &model.model.feature_names;
    let missing: Vec<&String> = names.iter().filter(|n| !features.contains_key(n.as_str())).collect();
    let unexpected: Vec<&String> = features.keys().filter(|k| !names.contains(k)).collect();
    let invalid: Vec<&String> = names
        .iter()
        .filter(|n| features.get(n.as_str()).is_some_and(|v| !v.as_f64().is_some_and(f64::is_finite)))
        .collect();
    if !(missing.is_empty() && unexpected.is_empty() && invalid.is_empty()) {
        let mut offending: Vec<&String> = missing.iter().chain(&unexpected).chain(&invalid).copied().collect();
        offending.sort();
        let mut extra = Map::new();
        extra.insert("missing".into(), json!(missing));
        extra.insert("unexpected".into(), json!(unexpected));
        extra.insert("invalid".into(), json!(invalid));
        let list = offending.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
        return Err(error_response(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_features",
            format!("offending features: {list}"),
            Some(extra),
        ));
    }
    let row = names.iter().map(|n| features[n.as_str()].as_f64().expect("validated")).collect();
    Ok(Checked { model, row, threshold })
}

async fn predict(State(state): State<AppState>, request: Request) -> Response {
    let explain = match explain_flag(request.uri().query()) {
        Ok(f) => f,
        Err(r) => return r,
    };
    let json_body = request
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    if !json_body {
        return error_response(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "unsupported_media_type",
            "expected application/json",
            None,
        );
    }
    let body = match to_bytes(request.into_body(), MAX_BODY_BYTES).await {
        Ok(b) => b,
        Err(_) => {
            return error_response(
                StatusCode::PAYLOAD_TOO_LARGE,
                "body_too_large",
                format!("body exceeds {MAX_BODY_BYTES} bytes"),
                None,
            )
        }
    };
    let checked = match check_request(&state.registry, &body) {
        Ok(c) => c,
        Err(r) => return r,
    };
    respond(&checked, explain)
}

fn respond(c: &Checked<'_>, explain: bool) -> Response {
    let model = &c.model.model;
    let probability = match model.predict_proba(&c.row) {
        Ok(p) => p,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, "invalid_features", e.to_string(), None),
    };
    let warnings: Vec<Value> = c
        .model
        .manifest
        .iter()
        .zip(&c.row)
        .filter(|(f, &v)| v < f.min || v > f.max)
        .map(|(f, &v)| json!({ "feature": f.name, "value": v, "min": f.min, "max": f.max, "message": "outside the training range" }))
        .collect();
    let mut out = json!({
        "model": c.model.id,
        "probability": probability,
        "label": if probability >= c.threshold { "positive" } else { "negative" },
        "threshold": c.threshold,
        "model_version": c.model.version,
        "warnings": warnings,
    });
    if explain {
        let explanation = TreeExplainer::from_model(model).and_then(|ex| ex.explain(&c.row));
        match explanation {
            Ok(e) => {
                let triples: Vec<Value> = model
                    .feature_names
                    .iter()
                    .zip(&c.row)
                    .zip(&e.contributions)
                    .map(|((f, v), s)| json!({ "feature": f, "value": v, "shap": s }))
                    .collect();
                out["explanation"] = json!({
                    "space": "log_odds",
                    "base_value": e.base_value,
                    "contributions": triples,
                });
            }
            Err(e) => return error_response(StatusCode::INTERNAL_SERVER_ERROR, "explain_failed", e.to_string(), None),
        }
    }
    let mut resp = axum::Json(out).into_response();
    resp.headers_mut().insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    resp
}

/// Bind and serve until Ctrl-C.
pub async fn serve(cfg: ServeConfig, schema: &Schema) -> Result<()> {
    let registry = Arc::new(Registry::load_dir(&cfg.model_dir, schema)?);
    let addr: SocketAddr = format!("{}:{}", cfg.host, cfg.port)
        .parse()
        .map_err(|_| Error::Config(format!("bad listen address {}:{}", cfg.host, cfg.port)))?;
    let listener =
        tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::Service(format!("cannot bind {addr}: {e}")))?;
    tracing::info!(%addr, models = registry.models.len(), "serving");
    axum::serve(listener, router(registry, cfg.token))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Service(e.to_string()))
}
