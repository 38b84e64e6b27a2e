//! Start the inference service on an ephemeral port with freshly trained
//! models, send it a few requests over plain TCP and shut down.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use serde_json::{json, Map, Value};
use triage::data::{Schema, Task};
use triage::pipeline::{fit, load_cohort, prepare, RunConfig};
use triage::service::{router, Registry};

fn request(addr: std::net::SocketAddr, method: &str, path: &str, body: Option<&Value>) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    let body = body.map(Value::to_string).unwrap_or_default();
    let ctype = if body.is_empty() { "" } else { "Content-Type: application/json\r\n" };
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\n{ctype}Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = String::new();
    s.read_to_string(&mut out)?;
    Ok(out.split("\r\n\r\n").nth(1).unwrap_or_default().to_string())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = Schema::bundled();
    let cfg = RunConfig::new(Task::Severity);
    let p = prepare(&load_cohort(&cfg, &schema)?, &schema, &cfg)?;
    let (model, _) = fit(&p.train, &cfg)?;
    let features: Map<String, Value> =
        model.feature_names.iter().cloned().zip(p.val.matrix.row(0).iter().map(|v| json!(v))).collect();
    let registry = Arc::new(Registry::from_models([("severity".to_string(), model)], &schema));

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?;
    rt.spawn(async move { axum::serve(listener, router(registry, None)).await });
    println!("listening on {addr}");

    println!("GET /health -> {}", request(addr, "GET", "/health", None)?);
    let good = json!({ "model": "severity", "features": features });
    let reply: Value = serde_json::from_str(&request(addr, "POST", "/predict?explain=true", Some(&good))?)?;
    println!(
        "POST /predict?explain=true -> probability {} label {} base_value {}",
        reply["probability"], reply["label"], reply["explanation"]["base_value"]
    );
    let bad = json!({ "model": "severity", "features": { "Age": "old" } });
    let reply: Value = serde_json::from_str(&request(addr, "POST", "/predict", Some(&bad))?)?;
    println!("POST /predict (bad) -> {} invalid {}", reply["error"]["code"], reply["error"]["invalid"]);
    Ok(())
}
