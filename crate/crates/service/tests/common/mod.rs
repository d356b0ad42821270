#![allow(dead_code)]

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use rmech_core::dataset::synth::POOL;
use rmech_core::dataset::{generate, prepare, Corpus, SynthConfig};
use rmech_core::featurize::{Drfp, DrfpEncoder};
use rmech_core::neural::TrainConfig;
use rmech_core::predictor::{
    fit_contrastive, fit_ranker, fit_sites, ContrastivePipeline, PipelineRegistry, TwoStepPipeline,
};
use rmech_service::session::SessionStore;
use rmech_service::{router, AppState};

/// Teacher plus both learned pipelines, fitted briefly on a small corpus.
pub fn full_registry() -> PipelineRegistry {
    static CELL: OnceLock<PipelineRegistry> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = SynthConfig { pool: POOL[..8].iter().map(|s| s.to_string()).collect(), ..SynthConfig::default() };
        let prepared = prepare(&Corpus::from_records(generate(&cfg)));
        let tc = TrainConfig { max_epochs: 2, patience: 2, seed: 3, ..TrainConfig::default() };
        let (sites, _) = fit_sites(&prepared, &tc, "test").unwrap();
        let (ranker, _) = fit_ranker(&prepared, &DrfpEncoder(Drfp::default()), 4, &tc, "test").unwrap();
        let (pair, _) = fit_contrastive(&prepared, 3, &tc, "test").unwrap();
        let mut r = PipelineRegistry::with_teacher();
        r.register(Arc::new(TwoStepPipeline::from_models(sites, ranker).unwrap()));
        r.register(Arc::new(ContrastivePipeline::new(pair).unwrap()));
        r
    })
    .clone()
}

pub fn app_with(registry: PipelineRegistry, idle: Duration, node_budget: usize, max_sessions: usize) -> Router {
    router(Arc::new(AppState { registry, sessions: SessionStore::new(idle, max_sessions), node_budget }))
}

pub fn app() -> Router {
    app_with(full_registry(), Duration::from_secs(600), 2000, 64)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let json = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, json, bytes)
}

pub async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, v, _) = call(app, "POST", uri, Some(body)).await;
    (s, v)
}

pub async fn post_raw(app: &Router, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn schema_doc() -> &'static Value {
    static DOC: OnceLock<Value> = OnceLock::new();
    DOC.get_or_init(|| {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/api-v1.schema.json");
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    })
}

/// Validation errors of `instance` against the named definition.
pub fn schema_errors(definition: &str, instance: &Value) -> Vec<String> {
    let mut doc = schema_doc().clone();
    assert!(doc["definitions"].get(definition).is_some(), "no definition {definition}");
    doc["$ref"] = Value::String(format!("#/definitions/{definition}"));
    let compiled = jsonschema::JSONSchema::compile(&doc).expect("schema compiles");
    let errors = match compiled.validate(instance) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    errors
}

pub fn assert_schema(definition: &str, instance: &Value) {
    let errors = schema_errors(definition, instance);
    assert!(errors.is_empty(), "{definition} schema violations: {errors:?}\n{instance:#}");
}

/// Status and body checks shared by every error response.
pub fn assert_error(status: StatusCode, body: &Value, want: StatusCode, code: &str) {
    assert_eq!(status, want, "{body:#}");
    assert_eq!(body["code"], code, "{body:#}");
    assert_schema("ApiError", body);
}
