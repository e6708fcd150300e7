use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use uwl_core::transcribe::{transcribe, TranslationTable, Vocabulary};
use uwl_service::{router, AppState, DocumentStore};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn app_with(static_dir: Option<PathBuf>) -> (Router, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    for case in ["a", "b", "c"] {
        std::fs::copy(repo().join(format!("fixtures/case_{case}.json")), dir.path().join(format!("case_{case}.json")))
            .unwrap();
    }
    std::fs::write(dir.path().join("broken.json"), "{").unwrap();
    let (store, skipped) = DocumentStore::open(dir.path()).unwrap();
    assert_eq!(skipped.len(), 1);
    let state = Arc::new(AppState { store, vocabulary: Vocabulary::builtin(), locale_dir: repo().join("locales") });
    (router(state, static_dir), dir)
}

fn app() -> (Router, tempfile::TempDir) {
    app_with(None)
}

async fn send(app: &Router, method: &str, uri: &str, headers: &[(&str, &str)], body: impl Into<Body>) -> (StatusCode, String, Option<String>) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let resp = app.clone().oneshot(req.body(body.into()).unwrap()).await.unwrap();
    let status = resp.status();
    let etag = resp.headers().get("etag").map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap(), etag)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String, Option<String>) {
    send(app, "GET", uri, &[], Body::empty()).await
}

fn json_body(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[tokio::test]
async fn list_and_fetch() {
    let (app, _dir) = app();
    let (status, body, _) = get(&app, "/api/workflows").await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<String> = json_body(&body).as_array().unwrap().iter().map(|w| w["id"].as_str().unwrap().into()).collect();
    assert_eq!(ids, ["case_a", "case_b", "case_c"]);

    let (status, body, etag) = get(&app, "/api/workflows/case_a").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(etag.as_deref(), Some("\"1\""));
    assert_eq!(body, std::fs::read_to_string(repo().join("fixtures/case_a.json")).unwrap());

    assert_eq!(get(&app, "/api/workflows/nope").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/api/workflows/..%2Fsecret").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn protocol_matches_library_output() {
    let (app, _dir) = app();
    for case in ["a", "b", "c"] {
        let doc = uwl_core::parse(&std::fs::read_to_string(repo().join(format!("fixtures/case_{case}.json"))).unwrap()).unwrap();
        let want = transcribe(&doc, &Vocabulary::builtin(), &TranslationTable::english()).unwrap();
        let (status, body, _) = get(&app, &format!("/api/workflows/case_{case}/protocol")).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body, want);
    }
    let (status, body, _) = get(&app, "/api/workflows/case_a/protocol?lang=es").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.starts_with("Nombre del experimento"));
    assert_eq!(get(&app, "/api/workflows/case_a/protocol?lang=zz").await.0, StatusCode::NOT_FOUND);
    let (status, body, _) = get(&app, "/api/workflows/case_a/protocol?format=json").await;
    assert_eq!(status, StatusCode::OK);
    assert!(json_body(&body)["procedure"].as_array().unwrap().len() > 10);
}

#[tokio::test]
async fn put_needs_current_revision() {
    let (app, dir) = app();
    let (_, text, _) = get(&app, "/api/workflows/case_b").await;
    let changed = text.replacen("\"Name\": \"", "\"Name\": \"Edited ", 1);
    let (status, _, _) = send(&app, "PUT", "/api/workflows/case_b", &[], changed.clone()).await;
    assert_eq!(status, StatusCode::PRECONDITION_REQUIRED);
    let (status, body, _) = send(&app, "PUT", "/api/workflows/case_b", &[("if-match", "\"7\"")], changed.clone()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(json_body(&body)["error"]["code"], "STALE_REVISION");
    let (status, body, etag) = send(&app, "PUT", "/api/workflows/case_b", &[("if-match", "\"1\"")], changed.clone()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(etag.as_deref(), Some("\"2\""));
    assert_eq!(std::fs::read_to_string(dir.path().join("case_b.json")).unwrap(), changed);
    let (status, _, _) = send(&app, "PUT", "/api/workflows/case_b", &[("if-match", "1")], changed).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn put_creates_and_rejects_bad_documents() {
    let (app, _dir) = app();
    let doc = uwl_core::serialize(&uwl_core::Document::new("New").with(uwl_core::ActionNode::new(1, "Wait")));
    let (status, body, _) = send(&app, "PUT", "/api/workflows/fresh", &[], doc).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(json_body(&body)["revision"], 1);
    let (_, body, _) = get(&app, "/api/workflows").await;
    assert_eq!(json_body(&body).as_array().unwrap().len(), 4);

    let (status, body, _) = send(&app, "PUT", "/api/workflows/bad", &[], "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(json_body(&body)["error"]["code"], "SYNTAX");

    let dangling = uwl_core::serialize(
        &uwl_core::Document::new("X").with(uwl_core::ActionNode::new(1, "Add").with_edges(uwl_core::model::EdgeType::A, [9])),
    );
    let (status, body, _) = send(&app, "PUT", "/api/workflows/bad", &[], dangling).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(!json_body(&body)["violations"].as_array().unwrap().is_empty(), "{body}");
    assert_eq!(get(&app, "/api/workflows/bad").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn table_edit_reaches_protocol() {
    let (app, _dir) = app();
    let (status, body, _) = get(&app, "/api/workflows/case_a/table").await;
    assert_eq!(status, StatusCode::OK);
    let view = json_body(&body);
    let row = view["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["cells"][0].as_str().is_some_and(|v| v.contains("####")) && r["key"]["block"] != "User")
        .expect("a blank parameter")
        .clone();
    let mut edit = row["key"].clone();
    edit["value"] = json!("42 mg");
    let (status, body, etag) =
        send(&app, "PATCH", "/api/workflows/case_a/table", &[("content-type", "application/json")], edit.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(etag.as_deref(), Some("\"2\""));
    let (_, text, _) = get(&app, "/api/workflows/case_a/protocol").await;
    assert!(text.contains(&format!("{} - 42 mg", row["key"]["parameter"].as_str().unwrap())), "{text}");

    let missing = json!({"section_path": [], "block": "Nothing", "parameter": "Mass", "value": "1"});
    let (status, body, _) =
        send(&app, "PATCH", "/api/workflows/case_a/table", &[("content-type", "application/json")], missing.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["error"]["code"], "KEY_NOT_FOUND");

    let (status, body, _) = get(&app, "/api/workflows/case_a/table?format=csv").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.starts_with("Section,Block,Parameter,"));
}

#[tokio::test]
async fn concurrent_distinct_edits_all_land() {
    let (app, _dir) = app();
    let (_, body, _) = get(&app, "/api/workflows/case_b/table").await;
    let keys: Vec<Value> = json_body(&body)["rows"].as_array().unwrap().iter().map(|r| r["key"].clone()).take(40).collect();
    let mut tasks = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        let app = app.clone();
        let mut edit = key.clone();
        edit["value"] = json!(format!("v{i}"));
        tasks.push(tokio::spawn(async move {
            send(&app, "PATCH", "/api/workflows/case_b/table", &[("content-type", "application/json")], edit.to_string()).await.0
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, body, etag) = get(&app, "/api/workflows/case_b/table").await;
    assert_eq!(etag, Some(format!("\"{}\"", keys.len() + 1)));
    let rows = json_body(&body)["rows"].as_array().unwrap().clone();
    for (i, key) in keys.iter().enumerate() {
        let row = rows.iter().find(|r| &r["key"] == key).unwrap();
        assert_eq!(row["cells"][0], json!(format!("v{i}")), "{key}");
    }
}

#[tokio::test]
async fn validate_and_lint() {
    let (app, _dir) = app();
    let (status, body, _) = send(&app, "POST", "/api/workflows/case_c/validate", &[], Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json_body(&body)["valid"], true);

    let ann = std::fs::read_to_string(repo().join("fixtures/case_a.lint.json")).unwrap();
    let (status, body, _) = send(&app, "POST", "/api/workflows/case_a/lint", &[("content-type", "application/json")], ann).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let r = json_body(&body);
    assert_eq!(r["materials"], json!({"included": 10, "missing": 2}));
    assert_eq!(r["ambiguity_count"], 58);

    let bad = json!({"original_word_count": 5, "items": {"9999": "added"}});
    let (status, body, _) =
        send(&app, "POST", "/api/workflows/case_a/lint", &[("content-type", "application/json")], bad.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["error"]["code"], "BAD_ANNOTATION");
}

#[tokio::test]
async fn generate_and_surrogate() {
    let (app, _dir) = app();
    let req = json!({"preset": "low", "seed": 7, "count": 5, "documents": true});
    let (status, body, _) = send(&app, "POST", "/api/generate", &[("content-type", "application/json")], req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let out = json_body(&body);
    assert_eq!(out["samples"].as_array().unwrap().len(), 5);
    let (_, again, _) = send(&app, "POST", "/api/generate", &[("content-type", "application/json")], req.to_string()).await;
    assert_eq!(body, again);

    let doc = out["documents"][0].to_string();
    let (status, body, _) = send(&app, "POST", "/api/surrogate", &[], doc).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(json_body(&body)["response"], out["samples"][0]["response"]);

    let actions = json!({"actions": [{"name": 4, "params": [0.75], "items": [2]}]});
    let (_, body, _) = send(&app, "POST", "/api/surrogate", &[], actions.to_string()).await;
    assert_eq!(json_body(&body)["response"], 1.02);

    let bad = json!({"actions": [{"name": 12, "params": [0.75], "items": [2]}]});
    let (status, body, _) = send(&app, "POST", "/api/surrogate", &[], bad.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["error"]["code"], "BOUNDS");

    let huge = json!({"preset": "high", "count": 1_000_000});
    let (status, _, _) = send(&app, "POST", "/api/generate", &[("content-type", "application/json")], huge.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn static_assets() {
    let (app, _dir) = app();
    let (status, body, _) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.contains("/api/workflows"));

    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<p>editor</p>").unwrap();
    std::fs::write(assets.path().join("app.js"), "console.log(1)").unwrap();
    let (app, _dir) = app_with(Some(assets.path().to_path_buf()));
    assert_eq!(get(&app, "/").await.1, "<p>editor</p>");
    assert_eq!(get(&app, "/app.js").await.1, "console.log(1)");
    assert_eq!(get(&app, "/api/workflows").await.0, StatusCode::OK);
}
