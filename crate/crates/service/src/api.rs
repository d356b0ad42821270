//! The /api/v1 routes.

use std::sync::Arc;

use axum::extract::rejection::BytesRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rmech_core::chemgraph::{make_explicit, parse_smiles, write_smiles, MoleculeSet};
use rmech_core::orbchain::RuleSet;
use rmech_core::pathway::{match_targets, ContextSpec, Hit, NodeView, PathwayTree, SearchConfig, Target, TreeSnapshot};
use rmech_core::predictor::{Pipeline, PipelineRegistry, PredictOptions, StepSummary};

use crate::error::ApiError;
use crate::session::{Session, SessionStore, SessionTree};

/// Pipelines that need model files; asking for one that is not loaded is a
/// 503, any other unknown name a 400.
pub const LEARNED_PIPELINES: [&str; 2] = ["contrastive", "two_step"];

pub struct AppState {
    pub registry: PipelineRegistry,
    pub sessions: SessionStore,
    /// Hard cap on the nodes of one session tree.
    pub node_budget: usize,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/singlestep", post(singlestep))
        .route("/api/v1/pathway", post(create_pathway))
        .route("/api/v1/pathway/{id}", get(get_pathway))
        .route("/api/v1/pathway/{id}/expand", post(expand))
        .with_state(state)
}

/// JSON body whose rejections are [`ApiError`]s naming the bad field.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let bytes = axum::body::Bytes::from_request(req, state)
            .await
            .map_err(|e: BytesRejection| ApiError::new(e.status(), "bad_request", e.body_text()))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map(ApiJson).map_err(|e| {
            let path = e.path().to_string();
            let mut err = ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.inner().to_string());
            if path != "." {
                err = err.with_field(path);
            } else if let Some(name) = missing_field(&e.inner().to_string()) {
                err = err.with_field(name);
            }
            err
        })
    }
}

/// serde reports a missing field at the parent path, naming it only in the
/// message.
fn missing_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    Some(rest.split('`').next()?.to_string())
}

fn blocking_error(e: tokio::task::JoinError) -> ApiError {
    ApiError::internal(format!("worker failed: {e}"))
}

fn pipeline(state: &AppState, name: &str) -> Result<Arc<dyn Pipeline>, ApiError> {
    if let Ok(p) = state.registry.get(name) {
        return Ok(p);
    }
    if LEARNED_PIPELINES.contains(&name) {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "model_not_loaded",
            format!("pipeline `{name}` has no model loaded"),
        )
        .with_field("pipeline"));
    }
    Err(ApiError::validation(
        "pipeline",
        format!("unknown pipeline `{name}`; loaded: {}", state.registry.names().join(", ")),
    ))
}

fn parse_field(field: &str, smiles: &str) -> Result<MoleculeSet, ApiError> {
    if smiles.trim().is_empty() {
        return Err(ApiError::validation(field, "empty SMILES"));
    }
    parse_smiles(smiles).map_err(|e| ApiError::parse(field, smiles, &e))
}

fn rules(on: bool) -> RuleSet {
    if on {
        RuleSet::all()
    } else {
        RuleSet::none()
    }
}

fn default_top_n() -> usize {
    10
}
fn default_k_atoms() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_pipeline() -> String {
    "contrastive".into()
}
fn default_depth() -> usize {
    3
}
fn default_breadth() -> usize {
    10
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub pipelines: Vec<String>,
    pub sessions: usize,
    pub node_budget: usize,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        pipelines: state.registry.names().into_iter().map(String::from).collect(),
        sessions: state.sessions.live(),
        node_budget: state.node_budget,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleStepRequest {
    pub reactants: String,
    #[serde(default = "default_k_atoms")]
    pub k_atoms: usize,
    /// Apply the structural rule filters (Bredt).
    #[serde(default = "default_true")]
    pub rules: bool,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default = "default_pipeline")]
    pub pipeline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionView {
    pub rank: usize,
    pub score: f64,
    #[serde(flatten)]
    pub step: StepSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStepResponse {
    pub pipeline: String,
    /// Canonical reactants.
    pub reactants: String,
    pub predictions: Vec<PredictionView>,
}

async fn singlestep(
    State(state): State<Arc<AppState>>,
    ApiJson(req): ApiJson<SingleStepRequest>,
) -> Result<Json<SingleStepResponse>, ApiError> {
    let opts = PredictOptions { top_n: req.top_n, k_atoms: req.k_atoms, rules: rules(req.rules) };
    opts.validate()?;
    let ms = parse_field("reactants", &req.reactants)?;
    let p = pipeline(&state, &req.pipeline)?;
    let resp = tokio::task::spawn_blocking(move || -> Result<SingleStepResponse, ApiError> {
        let r = Arc::new(make_explicit(&ms));
        let preds = p.predict(&r, &opts)?;
        Ok(SingleStepResponse {
            pipeline: p.name().to_string(),
            reactants: write_smiles(&ms, true, false),
            predictions: preds
                .iter()
                .map(|x| PredictionView { rank: x.rank, score: x.score, step: StepSummary::of(&x.step) })
                .collect(),
        })
    })
    .await
    .map_err(blocking_error)??;
    if resp.predictions.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "no_candidates",
            format!("no mechanistic step applies to `{}`", resp.reactants),
        )
        .with_field("reactants"));
    }
    Ok(Json(resp))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwayRequest {
    pub reactants: String,
    #[serde(default)]
    pub targets: Vec<Target>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_breadth")]
    pub breadth: usize,
    #[serde(default)]
    pub context: Vec<ContextSpec>,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default = "default_true")]
    pub rules: bool,
    #[serde(default = "default_pipeline")]
    pub pipeline: String,
    #[serde(default = "default_k_atoms")]
    pub k_atoms: usize,
    /// Defaults to the server's cap, which it may not exceed.
    #[serde(default)]
    pub node_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayResponse {
    pub session: String,
    /// Unix seconds.
    pub created: u64,
    pub idle_timeout_secs: u64,
    /// Nodes created by this request.
    pub added: Vec<usize>,
    pub snapshot: TreeSnapshot,
}

fn check_targets(targets: &[Target]) -> Result<(), ApiError> {
    for (i, t) in targets.iter().enumerate() {
        let field = format!("targets[{i}]");
        if let Target::Structure { smiles } = t {
            parse_field(&field, smiles)?;
        }
        t.validate().map_err(|e| ApiError::validation(field, e.to_string()))?;
    }
    Ok(())
}

/// Rejects a configuration whose full tree could outgrow the server cap.
fn check_budget(cfg: &SearchConfig, cap: usize) -> Result<(), ApiError> {
    if cfg.node_budget > cap {
        return Err(ApiError::node_budget(format!("node_budget {} exceeds the server cap of {cap}", cfg.node_budget))
            .with_field("node_budget"));
    }
    if cfg.max_nodes() > cfg.node_budget {
        return Err(ApiError::node_budget(format!(
            "depth {} at breadth {} allows {} nodes, over the budget of {}",
            cfg.depth,
            cfg.breadth,
            cfg.max_nodes(),
            cfg.node_budget
        ))
        .with_field("breadth"));
    }
    Ok(())
}

fn response(session: &Session, st: &SessionTree, added: Vec<usize>, idle: u64) -> Result<PathwayResponse, ApiError> {
    let hits = match_targets(&st.tree, &st.targets)?;
    Ok(PathwayResponse {
        session: session.id.clone(),
        created: session.created,
        idle_timeout_secs: idle,
        added,
        snapshot: st.tree.snapshot(&hits),
    })
}

async fn create_pathway(
    State(state): State<Arc<AppState>>,
    ApiJson(req): ApiJson<PathwayRequest>,
) -> Result<Json<PathwayResponse>, ApiError> {
    parse_field("reactants", &req.reactants)?;
    for (i, c) in req.context.iter().enumerate() {
        parse_field(&format!("context[{i}]"), &c.smiles)?;
    }
    check_targets(&req.targets)?;
    let p = pipeline(&state, &req.pipeline)?;
    let cfg = SearchConfig {
        depth: req.depth,
        breadth: req.breadth,
        score_threshold: req.threshold,
        rules: rules(req.rules),
        pipeline: p.name().to_string(),
        node_budget: req.node_budget.unwrap_or(state.node_budget),
        k_atoms: req.k_atoms,
    };
    cfg.validate()?;
    check_budget(&cfg, state.node_budget)?;
    let tree = PathwayTree::new(&req.reactants, cfg, req.context)?;
    let session = state.sessions.insert(Session::new(p, tree, req.targets))?;
    let idle = state.sessions.idle_timeout.as_secs();
    let resp = tokio::task::spawn_blocking(move || -> Result<PathwayResponse, ApiError> {
        let mut st = session.state.lock().unwrap_or_else(|e| e.into_inner());
        let added = st.tree.expand_level(session.pipeline.as_ref())?;
        session.touch(std::time::Instant::now());
        response(&session, &st, added, idle)
    })
    .await
    .map_err(blocking_error)??;
    tracing::info!(session = %resp.session, nodes = resp.snapshot.nodes.len(), "pathway session created");
    Ok(Json(resp))
}

async fn get_pathway(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<PathwayResponse>, ApiError> {
    let session = state.sessions.get(&id)?;
    let idle = state.sessions.idle_timeout.as_secs();
    let resp = tokio::task::spawn_blocking(move || {
        let st = session.state.lock().unwrap_or_else(|e| e.into_inner());
        response(&session, &st, Vec::new(), idle)
    })
    .await
    .map_err(blocking_error)??;
    Ok(Json(resp))
}

/// Expands one node or the next BFS level, after applying any parameter
/// edits. Edits change later expansions only.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandRequest {
    #[serde(default)]
    pub node: Option<usize>,
    #[serde(default)]
    pub next_level: bool,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub breadth: Option<usize>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub rules: Option<bool>,
    #[serde(default)]
    pub k_atoms: Option<usize>,
    /// Replaces the session's targets.
    #[serde(default)]
    pub targets: Option<Vec<Target>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandResponse {
    pub session: String,
    /// Nodes expanded by this request; a node expanded earlier is listed
    /// with its existing children.
    pub expanded: Vec<usize>,
    /// Nodes created by this request.
    pub added: Vec<usize>,
    /// Views of the expanded nodes and all their children.
    pub nodes: Vec<NodeView>,
    pub hits: Vec<Hit>,
    pub truncated: bool,
    pub node_count: usize,
    pub frontier: Vec<usize>,
    pub config: SearchConfig,
}

async fn expand(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<ExpandRequest>,
) -> Result<Json<ExpandResponse>, ApiError> {
    match (req.node, req.next_level) {
        (Some(_), true) => return Err(ApiError::validation("node", "give either node or next_level, not both")),
        (None, false) => return Err(ApiError::validation("node", "give a node id or next_level: true")),
        _ => {}
    }
    if let Some(t) = &req.targets {
        check_targets(t)?;
    }
    let session = state.sessions.get(&id)?;
    let cap = state.node_budget;
    let resp = tokio::task::spawn_blocking(move || -> Result<ExpandResponse, ApiError> {
        let mut guard = session.state.lock().unwrap_or_else(|e| e.into_inner());
        let st = &mut *guard;
        let mut cfg = st.tree.config.clone();
        cfg.depth = req.depth.unwrap_or(cfg.depth);
        cfg.breadth = req.breadth.unwrap_or(cfg.breadth);
        cfg.score_threshold = req.threshold.unwrap_or(cfg.score_threshold);
        cfg.k_atoms = req.k_atoms.unwrap_or(cfg.k_atoms);
        if let Some(on) = req.rules {
            cfg.rules = rules(on);
        }
        if cfg != st.tree.config {
            cfg.validate()?;
            check_budget(&cfg, cap)?;
            st.tree.set_config(cfg)?;
        }
        if let Some(t) = req.targets {
            st.targets = t;
        }

        let targets: Vec<usize> = match req.node {
            Some(n) => vec![st.tree.node(n)?.id],
            None => st.tree.frontier(),
        };
        let needs_room = targets
            .iter()
            .any(|&n| !st.tree.nodes[n].expanded && st.tree.nodes[n].depth < st.tree.config.depth);
        if needs_room && st.tree.nodes.len() >= st.tree.config.node_budget {
            return Err(ApiError::node_budget(format!(
                "session holds {} nodes, its budget",
                st.tree.nodes.len()
            )));
        }
        let before = st.tree.nodes.len();
        let mut expanded = Vec::new();
        for n in targets {
            if st.tree.truncated && !st.tree.nodes[n].expanded {
                break;
            }
            st.tree.expand_node(n, session.pipeline.as_ref())?;
            expanded.push(n);
        }
        session.touch(std::time::Instant::now());
        let tree = &st.tree;
        let added: Vec<usize> = (before..tree.nodes.len()).collect();
        let mut ids: Vec<usize> = expanded.clone();
        ids.extend(expanded.iter().flat_map(|&n| tree.nodes[n].children.iter().copied()));
        ids.sort_unstable();
        ids.dedup();
        Ok(ExpandResponse {
            session: session.id.clone(),
            expanded,
            added,
            nodes: ids.iter().map(|&n| NodeView::of(&tree.nodes[n])).collect(),
            hits: match_targets(tree, &st.targets)?,
            truncated: tree.truncated,
            node_count: tree.nodes.len(),
            frontier: tree.frontier(),
            config: tree.config.clone(),
        })
    })
    .await
    .map_err(blocking_error)??;
    Ok(Json(resp))
}
