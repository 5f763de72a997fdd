use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use futures::StreamExt;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

use treeplan::{EmbeddingSolutionF64, PreparedF64};
use treeplan_service::session::replay;
use treeplan_service::{router, LogEntry, ServiceOptions, SessionConfig, VERSION_HEADER};

fn fixture(name: &str) -> String {
    let p = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn small() -> Value {
    json!({ "swarm": { "particles": 512, "seed": 7 }, "editParticles": 512 })
}

fn app() -> Router {
    router(ServiceOptions::default())
}

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: Value,
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    Reply { status, headers, body }
}

async fn create(app: &Router, name: &str, config: Value) -> String {
    let r = call(app, Method::POST, "/sessions", Some(json!({ "skeleton": fixture(name), "config": config }))).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    r.body["sessionId"].as_str().unwrap().to_string()
}

/// Polls the status until no solve is running.
async fn settle(app: &Router, id: &str) -> Value {
    for _ in 0..6000 {
        let r = call(app, Method::GET, &format!("/sessions/{id}"), None).await;
        assert_eq!(r.status, StatusCode::OK);
        if r.body["state"] != "running" {
            return r.body;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("solve did not finish");
}

async fn solution(app: &Router, id: &str) -> (EmbeddingSolutionF64, u64) {
    let r = call(app, Method::GET, &format!("/sessions/{id}/embedding"), None).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let v = r.headers[VERSION_HEADER].to_str().unwrap().parse().unwrap();
    (serde_json::from_value(r.body).unwrap(), v)
}

#[tokio::test(flavor = "multi_thread")]
async fn create_returns_distinct_ids_and_solves() {
    let app = app();
    let a = create(&app, "y_tree.swc", small()).await;
    let b = create(&app, "y_tree.swc", small()).await;
    assert_ne!(a, b);
    let st = settle(&app, &a).await;
    assert_eq!(st["state"], "done");
    assert_eq!(st["crossings"], 0);
    let (sol, version) = solution(&app, &a).await;
    assert_eq!(sol.crossings, 0);
    assert_eq!(sol.seed, 7);
    assert_eq!(version, 1);
    settle(&app, &b).await;
}

#[tokio::test(flavor = "multi_thread")]
async fn embedding_is_pending_while_the_first_solve_runs() {
    let app = app();
    let id = create(&app, "neuron.swc", json!({ "swarm": { "particles": 4096 } })).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/embedding"), None).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    assert_eq!(r.body["state"], "running");
    let edit = json!({ "segmentId": 1, "anchorNodeId": 1, "rotationRadians": 0.1 });
    let r = call(&app, Method::POST, &format!("/sessions/{id}/edits"), Some(edit)).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = call(&app, Method::POST, &format!("/sessions/{id}/weights"), Some(json!({ "wl": 1.0 }))).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await.status, StatusCode::NO_CONTENT);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_skeleton_reports_its_line() {
    let app = app();
    let swc = "1 0 0 0 0 0.1 -1\n2 0 1 oops 0 0.1 1\n";
    let r = call(&app, Method::POST, "/sessions", Some(json!({ "skeleton": swc }))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["line"], 2);
    assert!(r.body["error"].is_string());

    let r = call(&app, Method::POST, "/sessions", Some(json!({ "skeleton": "{}", "format": "json" }))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let bad = json!({ "skeleton": fixture("y_tree.swc"), "config": { "weights": { "wl": -1.0 } } });
    assert_eq!(call(&app, Method::POST, "/sessions", Some(bad)).await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_session_is_404() {
    let app = app();
    for uri in ["/sessions/nope", "/sessions/nope/embedding", "/sessions/nope/edits", "/sessions/nope/skeleton"] {
        assert_eq!(call(&app, Method::GET, uri, None).await.status, StatusCode::NOT_FOUND, "{uri}");
    }
    assert_eq!(call(&app, Method::DELETE, "/sessions/nope", None).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn json_skeletons_are_accepted() {
    let app = app();
    let tree = treeplan::skeleton::parse_swc::<f64>(&fixture("y_tree.swc")).unwrap();
    let body = json!({ "skeleton": treeplan::skeleton::serialize_json(&tree), "format": "json", "config": small() });
    let r = call(&app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let id = r.body["sessionId"].as_str().unwrap();
    assert_eq!(settle(&app, id).await["crossings"], 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn skeleton_and_report_schemas() {
    let app = app();
    let id = create(&app, "y_tree.swc", small()).await;
    settle(&app, &id).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/skeleton"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let nodes = r.body["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 6);
    for n in nodes {
        assert!(n["id"].is_u64() && n["position"].as_array().unwrap().len() == 3 && n["radius"].is_f64());
        assert!(n.get("parent").is_some() && n.get("group").is_some());
    }
    assert!(nodes[0]["parent"].is_null());
    let segs = r.body["segments"].as_array().unwrap();
    assert_eq!(segs.len(), 3);
    for (i, s) in segs.iter().enumerate() {
        assert_eq!(s["index"], i);
        assert!(!s["nodeIds"].as_array().unwrap().is_empty());
        assert!(s["attachNodeId"].is_u64());
    }
    // the two branches get different colors, the trunk none
    assert!(segs[0]["group"].is_null());
    assert_ne!(segs[1]["group"], segs[2]["group"]);

    let r = call(&app, Method::GET, &format!("/sessions/{id}/report"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["crossings"], 0);
    assert_eq!(r.body["nodeCount"], 6);
    for key in ["L_l", "L_a", "maxPerNode_l", "maxPerNode_a", "avg_l", "avg_a"] {
        assert!(r.body["metric1"][key].is_number() && r.body["metric2"][key].is_number(), "{key}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn edits_weights_and_replay() {
    let app = app();
    let config = small();
    let id = create(&app, "random20.swc", config.clone()).await;
    settle(&app, &id).await;
    let (before, v1) = solution(&app, &id).await;

    // a zero rotation commits the same layout
    let skel = call(&app, Method::GET, &format!("/sessions/{id}/skeleton"), None).await.body;
    let seg = &skel["segments"][3];
    let anchor = seg["attachNodeId"].as_u64().unwrap();
    let edit = json!({ "segmentId": 3, "anchorNodeId": anchor, "rotationRadians": 0.0 });
    let r = call(&app, Method::POST, &format!("/sessions/{id}/edits"), Some(edit)).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    assert!(r.body["jobId"].is_u64());
    settle(&app, &id).await;
    let (same, v2) = solution(&app, &id).await;
    assert_eq!(same, before);
    assert_eq!(v2, v1 + 1);

    let edit = json!({ "segmentId": 3, "anchorNodeId": anchor, "rotationRadians": 0.9 });
    assert_eq!(call(&app, Method::POST, &format!("/sessions/{id}/edits"), Some(edit)).await.status, StatusCode::ACCEPTED);
    let st = settle(&app, &id).await;
    assert_eq!(st["crossings"], 0, "{st}");
    assert_eq!(st["residual"], false);

    let w = json!({ "wl": 0.1, "wa": 5.0 });
    assert_eq!(call(&app, Method::POST, &format!("/sessions/{id}/weights"), Some(w)).await.status, StatusCode::ACCEPTED);
    assert_eq!(settle(&app, &id).await["crossings"], 0);

    let log: Vec<LogEntry> =
        serde_json::from_value(call(&app, Method::GET, &format!("/sessions/{id}/edits"), None).await.body).unwrap();
    assert_eq!(log.len(), 3);
    assert!(matches!(log[2], LogEntry::Weights { .. }));

    let (current, _) = solution(&app, &id).await;
    let mut cfg = serde_json::to_value(SessionConfig::default()).unwrap();
    cfg["swarm"]["particles"] = json!(512);
    cfg["swarm"]["seed"] = json!(7);
    cfg["editParticles"] = json!(512);
    let cfg: SessionConfig = serde_json::from_value(cfg).unwrap();
    let tree = treeplan::skeleton::parse_swc(&fixture("random20.swc")).unwrap();
    let prepared = PreparedF64::new(tree, &cfg.view).unwrap();
    let replayed = replay(&prepared, &cfg, &log).unwrap();
    assert_eq!(replayed.to_json(), current.to_json());
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_edits_are_422() {
    let app = app();
    let id = create(&app, "y_tree.swc", small()).await;
    settle(&app, &id).await;
    for edit in [
        json!({ "segmentId": 40, "anchorNodeId": 1, "rotationRadians": 0.1 }),
        json!({ "segmentId": 1, "anchorNodeId": 400, "rotationRadians": 0.1 }),
        json!({ "segmentId": 1, "anchorNodeId": 1, "rotationRadians": 0.1 }),
    ] {
        let r = call(&app, Method::POST, &format!("/sessions/{id}/edits"), Some(edit.clone())).await;
        assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "{edit}");
        assert!(r.body["error"].is_string());
    }
    let r = call(&app, Method::POST, &format!("/sessions/{id}/weights"), Some(json!({ "wa": -2.0 }))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let log = call(&app, Method::GET, &format!("/sessions/{id}/edits"), None).await.body;
    assert_eq!(log, json!([]));
}

#[tokio::test(flavor = "multi_thread")]
async fn cors_headers_are_sent() {
    let app = router(ServiceOptions { defaults: SessionConfig::default(), allow_origin: Some("http://editor.test".into()) });
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/sessions")
        .header(header::ORIGIN, "http://editor.test")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://editor.test");

    let any = self::app();
    let req = Request::builder().uri("/sessions/x").header(header::ORIGIN, "http://a.test").body(Body::empty()).unwrap();
    let res = any.oneshot(req).await.unwrap();
    assert_eq!(res.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test(flavor = "multi_thread")]
async fn progress_socket_streams_non_increasing_energy() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = app();
    let server = app.clone();
    tokio::spawn(async move { axum::serve(listener, server).await.unwrap() });

    let id = create(&app, "random20.swc", json!({ "swarm": { "particles": 2048 } })).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/progress")).await.unwrap();
    let mut frames = Vec::new();
    let done = loop {
        let msg = tokio::time::timeout(Duration::from_secs(120), ws.next()).await.unwrap().unwrap().unwrap();
        let Message::Text(text) = msg else { continue };
        let v: Value = serde_json::from_str(&text).unwrap();
        if v["done"] == true {
            break v;
        }
        frames.push((v["c"].as_u64().unwrap(), v["energy"].as_f64().unwrap()));
    };
    assert!(!frames.is_empty());
    assert!(frames.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 <= w[0].1), "{frames:?}");
    assert_eq!(done["jobId"], 1);
    assert_eq!(done["crossings"], 0);

    // a late subscriber still gets the finished job's events
    let (mut late, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/{id}/progress")).await.unwrap();
    let mut last = Value::Null;
    while let Ok(Some(Ok(Message::Text(text)))) = tokio::time::timeout(Duration::from_millis(500), late.next()).await {
        last = serde_json::from_str(&text).unwrap();
        if last["done"] == true {
            break;
        }
    }
    assert_eq!(last["done"], true);
}
