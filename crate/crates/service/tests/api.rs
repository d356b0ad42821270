mod common;

use std::time::Duration;

use axum::http::StatusCode;
use serde_json::{json, Value};

use common::*;
use rmech_core::chemgraph::parse_smiles;
use rmech_core::pathway::load_benchmark;
use rmech_core::predictor::PipelineRegistry;

const SINGLESTEP: &str = "/api/v1/singlestep";
const PATHWAY: &str = "/api/v1/pathway";

fn expand_uri(session: &Value) -> String {
    format!("/api/v1/pathway/{}/expand", session.as_str().unwrap())
}

fn ids(v: &Value) -> Vec<u64> {
    v.as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
}

#[tokio::test]
async fn singlestep_chlorine_methane_returns_ranked_arrows() {
    let app = app();
    for pipeline in ["contrastive", "two_step", "teacher"] {
        let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl].[CH4]", "pipeline": pipeline})).await;
        assert_eq!(s, StatusCode::OK, "{body:#}");
        assert_schema("SingleStepResponse", &body);
        assert_eq!(body["pipeline"], pipeline);
        let preds = body["predictions"].as_array().unwrap();
        assert!(!preds.is_empty());
        for (i, p) in preds.iter().enumerate() {
            assert_eq!(p["rank"].as_u64().unwrap() as usize, i + 1);
            assert!(!p["arrows"].as_str().unwrap().is_empty());
            if i > 0 {
                assert!(preds[i - 1]["score"].as_f64() >= p["score"].as_f64());
            }
        }
    }
    // The teacher's favourite is the abstraction giving HCl and methyl.
    let (_, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl].[CH4]", "pipeline": "teacher", "top_n": 1})).await;
    let top = &body["predictions"][0];
    assert_eq!(top["products"], "Cl.[CH3]");
    assert_eq!(top["family"], "abstraction");
    assert_eq!(top["orbitals"].as_array().unwrap().len(), 2);
    let masses: Vec<f64> = top["product_masses"].as_array().unwrap().iter().map(|m| m["monoisotopic"].as_f64().unwrap()).collect();
    // HCl: 1.007825 + 34.968853; CH3: 12 + 3 * 1.007825.
    let mut want = [35.976678, 15.023475];
    want.sort_by(f64::total_cmp);
    let mut got = masses.clone();
    got.sort_by(f64::total_cmp);
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-5, "{got:?}");
    }
}

#[tokio::test]
async fn singlestep_parse_error_carries_position() {
    let app = app();
    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "C("})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "parse_error");
    assert_eq!(body["field"], "reactants");
    let want = parse_smiles("C(").unwrap_err().position;
    assert_eq!(body["position"].as_u64().unwrap() as usize, want);
    assert_eq!(want, 1);

    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "CC[Xe]"})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "parse_error");
    assert_eq!(body["position"], 3);
}

#[tokio::test]
async fn singlestep_validation_errors() {
    let app = app();
    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl].[CH4]", "top_n": 0})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");
    assert_eq!(body["field"], "top_n");

    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl].[CH4]", "k_atoms": 1})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");
    assert_eq!(body["field"], "k_atoms");

    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "  "})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");

    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "C", "pipeline": "nope"})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");
    assert_eq!(body["field"], "pipeline");

    let (s, body) = post(&app, SINGLESTEP, json!({"top_n": 3})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "bad_request");
    assert_eq!(body["field"], "reactants");

    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "C", "top_n": "three"})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "bad_request");
    assert_eq!(body["field"], "top_n");

    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "C", "colour": "red"})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "bad_request");

    let (s, body) = post_raw(&app, SINGLESTEP, "{\"reactants\": ").await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "bad_request");
}

#[tokio::test]
async fn singlestep_without_candidates_is_422() {
    let app = app();
    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl]", "pipeline": "teacher"})).await;
    assert_error(s, &body, StatusCode::UNPROCESSABLE_ENTITY, "no_candidates");
    assert_eq!(body["field"], "reactants");
}

#[tokio::test]
async fn missing_model_is_503() {
    let app = app_with(PipelineRegistry::with_teacher(), Duration::from_secs(60), 100, 4);
    for pipeline in ["contrastive", "two_step"] {
        let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl].[CH4]", "pipeline": pipeline})).await;
        assert_error(s, &body, StatusCode::SERVICE_UNAVAILABLE, "model_not_loaded");
        let (s, body) = post(&app, PATHWAY, json!({"reactants": "[Cl].[CH4]", "pipeline": pipeline, "depth": 1})).await;
        assert_error(s, &body, StatusCode::SERVICE_UNAVAILABLE, "model_not_loaded");
    }
    let (s, body) = post(&app, SINGLESTEP, json!({"reactants": "[Cl].[CH4]", "pipeline": "teacher"})).await;
    assert_eq!(s, StatusCode::OK, "{body:#}");
}

#[tokio::test]
async fn identical_singlestep_requests_return_identical_bodies() {
    let app = app();
    let req = json!({"reactants": "C=CC(C)=C.[OH]", "top_n": 5, "pipeline": "two_step"});
    let (_, _, a) = call(&app, "POST", SINGLESTEP, Some(req.clone())).await;
    // A pathway session in between must not disturb single-step answers.
    post(&app, PATHWAY, json!({"reactants": "C=CC(C)=C.[OH]", "depth": 1, "breadth": 2})).await;
    let (_, _, b) = call(&app, "POST", SINGLESTEP, Some(req)).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn health_lists_pipelines() {
    let app = app();
    let (s, body, _) = call(&app, "GET", "/api/v1/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_schema("Health", &body);
    assert_eq!(body["pipelines"], json!(["contrastive", "teacher", "two_step"]));
}

#[tokio::test]
async fn pathway_depth_one_breadth_three() {
    let app = app();
    let (s, body) = post(&app, PATHWAY, json!({"reactants": "CCC.[Cl]", "depth": 1, "breadth": 3})).await;
    assert_eq!(s, StatusCode::OK, "{body:#}");
    assert_schema("PathwayResponse", &body);
    let nodes = body["snapshot"]["nodes"].as_array().unwrap();
    let root_children = ids(&nodes[0]["children"]);
    assert!(!root_children.is_empty() && root_children.len() <= 3);
    assert_eq!(nodes.len(), 1 + root_children.len());
    assert_eq!(ids(&body["added"]), root_children);
    for n in &nodes[1..] {
        assert_eq!(n["depth"], 1);
        assert_eq!(n["parent"], 0);
        assert!(n["step"]["arrows"].is_string());
    }
}

#[tokio::test]
async fn root_reactant_target_hits_at_depth_zero() {
    let app = app();
    let req = json!({
        "reactants": "CCC.[Cl]",
        "targets": [{"kind": "structure", "smiles": "CCC"}],
        "depth": 2,
        "breadth": 2,
        "pipeline": "teacher"
    });
    let (s, body) = post(&app, PATHWAY, req).await;
    assert_eq!(s, StatusCode::OK, "{body:#}");
    let hits = body["snapshot"]["hits"].as_array().unwrap();
    let root_hit = hits.iter().find(|h| h["node"] == 0).expect("root hit");
    assert_eq!(root_hit["depth"], 0);
    assert_eq!(root_hit["path"], json!([0]));
}

#[tokio::test]
async fn isoprene_fixture_case_is_found_by_expansion() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/pathway_cases.jsonl");
    let case = load_benchmark(std::path::Path::new(path)).unwrap().into_iter().find(|c| c.id == "pw000").unwrap();
    assert!(case.reactants.contains("C=CC(C)=C"));
    let app = app();
    let req = json!({
        "reactants": case.reactants,
        "targets": case.targets,
        "context": case.context,
        "depth": case.depth,
        "breadth": 3,
        "pipeline": "teacher"
    });
    let (s, body) = post(&app, PATHWAY, req).await;
    assert_eq!(s, StatusCode::OK, "{body:#}");
    let mut hits = body["snapshot"]["hits"].clone();
    let mut rounds = 0;
    while hits.as_array().unwrap().is_empty() {
        let (s, body) = post(&app, &expand_uri(&body["session"]), json!({"next_level": true})).await;
        assert_eq!(s, StatusCode::OK, "{body:#}");
        assert_schema("ExpandResponse", &body);
        hits = body["hits"].clone();
        rounds += 1;
        assert!(rounds < case.depth, "no hit within depth {}", case.depth);
    }
    let hit = &hits[0];
    assert_eq!(hit["depth"].as_u64().unwrap() as usize, case.depth);
    assert_eq!(hit["path"].as_array().unwrap().len(), case.depth + 1);
}

#[tokio::test]
async fn expansion_is_idempotent_and_bounded_by_depth() {
    let app = app();
    let (_, created) = post(&app, PATHWAY, json!({"reactants": "CCO.[OH]", "depth": 2, "breadth": 2})).await;
    let uri = expand_uri(&created["session"]);
    let leaf = ids(&created["snapshot"]["nodes"][0]["children"])[0];

    let (s, first) = post(&app, &uri, json!({"node": leaf})).await;
    assert_eq!(s, StatusCode::OK, "{first:#}");
    assert_schema("ExpandResponse", &first);
    let children = ids(&first["nodes"].as_array().unwrap().iter().find(|n| n["id"] == leaf).unwrap()["children"]);
    assert!(!children.is_empty());
    assert_eq!(ids(&first["added"]), children);

    let (s, second) = post(&app, &uri, json!({"node": leaf})).await;
    assert_eq!(s, StatusCode::OK);
    assert!(ids(&second["added"]).is_empty());
    assert_eq!(second["node_count"], first["node_count"]);
    let again = ids(&second["nodes"].as_array().unwrap().iter().find(|n| n["id"] == leaf).unwrap()["children"]);
    assert_eq!(again, children);

    let (s, body) = post(&app, &uri, json!({"node": children[0]})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "beyond_depth");
    assert_eq!(body["field"], "node");

    let (s, body) = post(&app, &uri, json!({"node": 9999})).await;
    assert_error(s, &body, StatusCode::NOT_FOUND, "unknown_node");

    let (s, body) = post(&app, &uri, json!({})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");
    let (s, body) = post(&app, &uri, json!({"node": 0, "next_level": true})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");

    let (s, snap, _) = call(&app, "GET", &format!("/api/v1/pathway/{}", created["session"].as_str().unwrap()), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_schema("PathwayResponse", &snap);
    assert_eq!(snap["snapshot"]["nodes"].as_array().unwrap().len() as u64, second["node_count"].as_u64().unwrap());
}

#[tokio::test]
async fn unknown_and_expired_sessions() {
    let app = app_with(full_registry(), Duration::from_millis(100), 500, 8);
    let (s, body) = post(&app, "/api/v1/pathway/no-such-id/expand", json!({"next_level": true})).await;
    assert_error(s, &body, StatusCode::NOT_FOUND, "unknown_session");

    let (s, created) = post(&app, PATHWAY, json!({"reactants": "CC.[Cl]", "depth": 2, "breadth": 2, "pipeline": "teacher"})).await;
    assert_eq!(s, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(300)).await;
    let (s, body) = post(&app, &expand_uri(&created["session"]), json!({"next_level": true})).await;
    assert_error(s, &body, StatusCode::GONE, "session_expired");
    let (s, body, _) = call(&app, "GET", &format!("/api/v1/pathway/{}", created["session"].as_str().unwrap()), None).await;
    assert_error(s, &body, StatusCode::GONE, "session_expired");
}

#[tokio::test]
async fn node_budget_limits() {
    let app = app_with(full_registry(), Duration::from_secs(60), 100, 8);
    // 1 + 10 + 100 + 1000 nodes could be needed.
    let (s, body) = post(&app, PATHWAY, json!({"reactants": "CCC.[Cl]", "depth": 3, "breadth": 10})).await;
    assert_error(s, &body, StatusCode::TOO_MANY_REQUESTS, "node_budget");
    let (s, body) = post(&app, PATHWAY, json!({"reactants": "CCC.[Cl]", "depth": 1, "node_budget": 101})).await;
    assert_error(s, &body, StatusCode::TOO_MANY_REQUESTS, "node_budget");
    assert_eq!(body["field"], "node_budget");

    let req = json!({"reactants": "CCC.[Cl]", "depth": 1, "breadth": 5, "node_budget": 6, "pipeline": "teacher"});
    let (s, created) = post(&app, PATHWAY, req).await;
    assert_eq!(s, StatusCode::OK, "{created:#}");
    assert_eq!(created["snapshot"]["nodes"].as_array().unwrap().len(), 6);
    let uri = expand_uri(&created["session"]);
    // Deeper at the same breadth would need 31 nodes.
    let (s, body) = post(&app, &uri, json!({"node": 1, "depth": 2})).await;
    assert_error(s, &body, StatusCode::TOO_MANY_REQUESTS, "node_budget");
    // Narrow enough to fit, but the tree already holds its 6 nodes.
    let (s, body) = post(&app, &uri, json!({"node": 1, "depth": 5, "breadth": 1})).await;
    assert_error(s, &body, StatusCode::TOO_MANY_REQUESTS, "node_budget");
}

#[tokio::test]
async fn session_limit_is_429() {
    let app = app_with(full_registry(), Duration::from_secs(60), 100, 2);
    let req = json!({"reactants": "C.[Cl]", "depth": 1, "breadth": 1, "pipeline": "teacher"});
    for _ in 0..2 {
        assert_eq!(post(&app, PATHWAY, req.clone()).await.0, StatusCode::OK);
    }
    let (s, body) = post(&app, PATHWAY, req).await;
    assert_error(s, &body, StatusCode::TOO_MANY_REQUESTS, "session_limit");
}

#[tokio::test]
async fn pathway_request_validation() {
    let app = app();
    let cases = [
        (json!({"reactants": "CC(", "depth": 1}), "parse_error", "reactants"),
        (json!({"reactants": "CC", "depth": 0}), "validation", "depth"),
        (json!({"reactants": "CC", "breadth": 0}), "validation", "breadth"),
        (json!({"reactants": "CC", "threshold": 1.5}), "validation", "score_threshold"),
        (json!({"reactants": "CC", "targets": [{"kind": "structure", "smiles": "C.C"}]}), "validation", "targets[0]"),
        (json!({"reactants": "CC", "targets": [{"kind": "structure", "smiles": "C1"}]}), "parse_error", "targets[0]"),
        (json!({"reactants": "CC", "targets": [{"kind": "mass", "mass": 30.0, "tolerance": 0.0}]}), "validation", "targets[0]"),
        (json!({"reactants": "CC", "context": [{"smiles": "[O][O]", "frequency": 0}]}), "validation", "context"),
        (json!({"reactants": "CC", "context": [{"smiles": "O=(", "frequency": 1}]}), "parse_error", "context[0]"),
    ];
    for (req, code, field) in cases {
        let (s, body) = post(&app, PATHWAY, req.clone()).await;
        assert_error(s, &body, StatusCode::BAD_REQUEST, code);
        assert_eq!(body["field"], field, "{req}");
    }
}

#[tokio::test]
async fn parameter_edits_apply_to_later_expansions() {
    let app = app();
    let req = json!({"reactants": "CCC.[OH]", "depth": 3, "breadth": 3, "pipeline": "teacher"});
    let (_, created) = post(&app, PATHWAY, req).await;
    let uri = expand_uri(&created["session"]);
    let children = ids(&created["snapshot"]["nodes"][0]["children"]);

    // Scores stay strictly below one, so this threshold admits nothing.
    let (s, body) = post(&app, &uri, json!({"node": children[0], "threshold": 1.0})).await;
    assert_eq!(s, StatusCode::OK, "{body:#}");
    assert!(ids(&body["added"]).is_empty());
    assert_eq!(body["config"]["score_threshold"], 1.0);

    let (s, body) = post(&app, &uri, json!({"node": children[1], "threshold": 0.0, "breadth": 1})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ids(&body["added"]).len(), 1);

    let (s, body) = post(&app, &uri, json!({"node": children[2], "depth": 0})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");
    let (s, body) = post(&app, &uri, json!({"node": children[2], "depth": 1})).await;
    assert_error(s, &body, StatusCode::BAD_REQUEST, "validation");

    // Replacing targets re-scores the existing tree.
    let grandchild = ids(&body_of_node(&app, &created["session"], children[1]).await["children"])[0];
    let smiles = node_smiles(&app, &created["session"], grandchild).await;
    let first = smiles.split('.').max_by_key(|s| s.len()).unwrap().to_string();
    let (s, body) = post(&app, &uri, json!({"next_level": true, "targets": [{"kind": "structure", "smiles": first}]})).await;
    assert_eq!(s, StatusCode::OK, "{body:#}");
    assert!(body["hits"].as_array().unwrap().iter().any(|h| h["node"] == grandchild));
}

async fn snapshot_nodes(app: &axum::Router, session: &Value) -> Vec<Value> {
    let (_, snap, _) = call(app, "GET", &format!("/api/v1/pathway/{}", session.as_str().unwrap()), None).await;
    snap["snapshot"]["nodes"].as_array().unwrap().clone()
}

async fn body_of_node(app: &axum::Router, session: &Value, id: u64) -> Value {
    snapshot_nodes(app, session).await.into_iter().find(|n| n["id"] == id).unwrap()
}

async fn node_smiles(app: &axum::Router, session: &Value, id: u64) -> String {
    body_of_node(app, session, id).await["smiles"].as_str().unwrap().to_string()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_expansions_of_one_session_are_serialized() {
    let app = app();
    let req = json!({"reactants": "CCCO.[OH]", "depth": 3, "breadth": 3, "pipeline": "teacher"});
    let (_, created) = post(&app, PATHWAY, req.clone()).await;
    let uri = expand_uri(&created["session"]);
    let calls: Vec<_> = (0..4)
        .map(|_| {
            let app = app.clone();
            let uri = uri.clone();
            tokio::spawn(async move { post(&app, &uri, json!({"next_level": true})).await })
        })
        .collect();
    let mut added = Vec::new();
    for c in calls {
        let (s, body) = c.await.unwrap();
        assert_eq!(s, StatusCode::OK, "{body:#}");
        added.extend(ids(&body["added"]));
    }
    let nodes = snapshot_nodes(&app, &created["session"]).await;
    let total = nodes.len() as u64;
    let mut sorted = added.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), added.len(), "a node was reported twice");
    assert_eq!(sorted.len() as u64 + created["snapshot"]["nodes"].as_array().unwrap().len() as u64, total);

    // The same requests made one after another build the same tree.
    let (_, other) = post(&app, PATHWAY, req).await;
    let other_uri = expand_uri(&other["session"]);
    for _ in 0..4 {
        post(&app, &other_uri, json!({"next_level": true})).await;
    }
    let sequential = snapshot_nodes(&app, &other["session"]).await;
    assert_eq!(sequential, nodes);
}

#[tokio::test]
async fn sessions_do_not_share_trees() {
    let app = app();
    let req = json!({"reactants": "CCO.[Cl]", "depth": 2, "breadth": 2, "pipeline": "teacher"});
    let (_, a) = post(&app, PATHWAY, req.clone()).await;
    let (_, b) = post(&app, PATHWAY, req).await;
    assert_ne!(a["session"], b["session"]);
    assert_eq!(a["snapshot"], b["snapshot"]);
    post(&app, &expand_uri(&a["session"]), json!({"next_level": true})).await;
    let after_a = snapshot_nodes(&app, &a["session"]).await;
    let after_b = snapshot_nodes(&app, &b["session"]).await;
    assert!(after_a.len() > after_b.len());
    assert_eq!(&after_b, b["snapshot"]["nodes"].as_array().unwrap());
}

#[test]
fn request_schemas_accept_and_reject() {
    let good = [
        ("SingleStepRequest", json!({"reactants": "[Cl].[CH4]", "top_n": 3, "rules": false})),
        (
            "PathwayRequest",
            json!({"reactants": "C=CC(C)=C.[OH]", "targets": [{"kind": "mass", "mass": 101.06}], "context": [{"smiles": "[O][O]", "frequency": 1}]}),
        ),
        ("ExpandRequest", json!({"node": 3, "breadth": 4})),
        ("ExpandRequest", json!({"next_level": true, "targets": [{"kind": "structure", "smiles": "CCO"}]})),
    ];
    for (def, v) in good {
        assert_schema(def, &v);
    }
    let bad = [
        ("SingleStepRequest", json!({"reactants": "C", "top_n": 0})),
        ("SingleStepRequest", json!({"top_n": 1})),
        ("PathwayRequest", json!({"reactants": "C", "targets": [{"kind": "colour"}]})),
        ("ExpandRequest", json!({"node": -1})),
    ];
    for (def, v) in bad {
        assert!(!schema_errors(def, &v).is_empty(), "{def} accepted {v}");
    }
}
