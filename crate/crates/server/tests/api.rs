use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use pubdev_core::corpus::{LabeledDataset, ProjectRecord};
use pubdev_core::features::{featurize_dataset, FeatureSchema};
use pubdev_core::par::Execution;
use pubdev_core::tree::{DecisionTree, TrainParams, TreeNode};
use pubdev_core::triage::{flag_leaves_explicit, leaf_statistics, TriageSession};
use pubdev_core::Class;
use pubdev_server::{router, serve_triage, AppState};

fn session(dir: &Path) -> TriageSession {
    let schema = FeatureSchema::default_schema();
    let recs = (0..8)
        .map(|i| {
            let mut r = ProjectRecord::bare(format!("p{i}"));
            r.description = Some(
                if i % 2 == 0 {
                    "my demo app"
                } else {
                    "http library"
                }
                .into(),
            );
            r.url = format!("https://github.com/o/p{i}");
            r.star_count = i;
            r.label = Some(Class::from(i % 3 != 0));
            r
        })
        .collect();
    let ds = LabeledDataset::new(recs, "test").unwrap();
    let (m, l) = featurize_dataset(&ds, &schema, Execution::Sequential);
    let tree = DecisionTree::with_numbered_leaves(
        TreeNode::boolean(
            "demo",
            TreeNode::leaf(Class::True),
            TreeNode::leaf(Class::False),
        ),
        schema.fingerprint(),
        TrainParams::default(),
    )
    .unwrap();
    let stats = leaf_statistics(&tree, &m, &l).unwrap();
    let flags = flag_leaves_explicit(&stats, &[1], ds.len()).unwrap();
    let mut s = TriageSession::prepare("api-test", tree, flags, &ds, &m).unwrap();
    s.attach_store(dir.join("labels.ndjson")).unwrap();
    s
}

fn app(dir: &Path) -> Router {
    router(AppState::new(session(dir), None))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

async fn call_json(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn next_returns_first_pending_item_with_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, v) = call_json(&app, "GET", "/api/next", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["empty"], false);
    let item = &v["item"];
    assert_eq!(item["project_id"], "p0");
    assert_eq!(item["description"], "my demo app");
    assert_eq!(item["url"], "https://github.com/o/p0");
    assert_eq!(item["auto_class"], "FALSE");
    assert_eq!(item["status"], "pending");
    assert!(item["criteria_text"]
        .as_str()
        .unwrap()
        .contains("UNDECIDED"));
}

#[tokio::test]
async fn label_then_metrics_decrements_pending() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, before) = call_json(&app, "GET", "/api/metrics", None).await;
    assert_eq!(before["pending"], 4);
    assert_eq!(before["effort"], 0.5);

    let (status, v) = call_json(
        &app,
        "POST",
        "/api/label",
        Some(json!({"project_id": "p0", "decision": "FALSE", "note": "personal"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({"ok": true, "pending": 3}));

    let (_, after) = call_json(&app, "GET", "/api/metrics", None).await;
    assert_eq!(after["pending"], 3);
    assert_eq!(after["combined"]["pending"], 3);

    let (_, next) = call_json(&app, "GET", "/api/next", None).await;
    assert_eq!(next["item"]["project_id"], "p2");
    let (_, item) = call_json(&app, "GET", "/api/item/p0", None).await;
    assert_eq!(item["status"], "decided");
}

#[tokio::test]
async fn unknown_id_and_bad_decision_are_client_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, v) = call_json(
        &app,
        "POST",
        "/api/label",
        Some(json!({"project_id": "nope", "decision": "TRUE"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(v["error"].as_str().unwrap().contains("nope"));

    // p1 exists in the dataset but was auto-classified
    let (status, _) = call_json(
        &app,
        "POST",
        "/api/label",
        Some(json!({"project_id": "p1", "decision": "TRUE"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, v) = call_json(
        &app,
        "POST",
        "/api/label",
        Some(json!({"project_id": "p0", "decision": "MAYBE"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("MAYBE"));

    let (status, _) = call_json(&app, "GET", "/api/item/zzz", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for (id, d) in [("p2", "TRUE"), ("p4", "UNDECIDED"), ("p2", "FALSE")] {
        let (status, _) = call_json(
            &app,
            "POST",
            "/api/label",
            Some(json!({"project_id": id, "decision": d})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, s) = call_json(&app, "GET", "/api/session", None).await;
    assert_eq!(s["session_id"], "api-test");
    assert_eq!(
        (s["total"].as_u64(), s["pending"].as_u64()),
        (Some(4), Some(2))
    );
    assert_eq!(
        (s["decided"].as_u64(), s["undecided"].as_u64()),
        (Some(1), Some(1))
    );

    let (status, body) = call(&app, "GET", "/api/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let lines: Vec<Value> = String::from_utf8(body)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["project_id"], "p2");
    assert_eq!(lines[0]["decision"], "FALSE");
    assert_eq!(lines[1]["decision"], "UNDECIDED");
}

#[tokio::test]
async fn placeholder_page_and_static_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (status, body) = call(&app(dir.path()), "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api"));

    let ui = dir.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<p>bundle</p>").unwrap();
    let with_ui = router(AppState::new(session(dir.path()), Some(ui)));
    let (status, body) = call(&with_ui, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<p>bundle</p>");
}

#[tokio::test]
async fn real_socket_round_trip_and_shutdown_persists() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};

    let dir = tempfile::tempdir().unwrap();
    let server = serve_triage(session(dir.path()), "127.0.0.1:0", None)
        .await
        .unwrap();
    let addr = server.local_addr();

    let body = json!({"project_id": "p6", "decision": "TRUE"}).to_string();
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    let req = format!(
        "POST /api/label HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(req.as_bytes()).await.unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).await.unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"pending\":3"));

    server.shutdown().await.unwrap();

    let reloaded = session(dir.path());
    assert_eq!(
        reloaded.decisions()["p6"].decision,
        pubdev_core::Decision::True
    );
    assert_eq!(reloaded.summary().pending, 3);
}

#[tokio::test]
async fn bind_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let err = serve_triage(session(dir.path()), &addr, None)
        .await
        .err()
        .unwrap();
    assert!(err.to_string().contains("cannot bind"));
}
