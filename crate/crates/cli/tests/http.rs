use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use kgdm_cli::server::{router, AppState};
use kgdm_core::{fixtures, ChatConfig, KnowledgeGraph};
use serde_json::Value;
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(fixtures::org(), ChatConfig::default()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn healthz() {
    let (status, body) = call(&app(), "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn session_lifecycle() {
    let app = app();
    let (status, body) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = body["session_id"].as_str().unwrap().to_string();
    let (_, other) = call(&app, "POST", "/sessions", None).await;
    assert_ne!(other["session_id"].as_str().unwrap(), id);

    let text = r#"{"text":"Hello! My name is Wendy Parker and I am trying to find out who is organizing the users workshop."}"#;
    let (status, reply) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/utterance"),
        Some(text),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!(!reply["response"].as_str().unwrap().is_empty());
    let wendy = reply["linked"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["surface"] == "Wendy Parker")
        .unwrap();
    assert_eq!(wendy["entities"][0]["label"], "Wendy Parker");
    assert_eq!(reply["candidates"].as_array().unwrap().len(), 10);

    let (status, graph) = call(&app, "GET", &format!("/sessions/{id}/graph"), None).await;
    assert_eq!(status, StatusCode::OK);
    let g = KnowledgeGraph::from_json(&graph.to_string()).unwrap();
    assert!(g.validate().is_ok());
}

#[tokio::test]
async fn errors_are_json() {
    let app = app();
    let (status, body) = call(
        &app,
        "POST",
        "/sessions/nope/utterance",
        Some(r#"{"text":"hi"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    let (status, _) = call(&app, "GET", "/sessions/nope/graph", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (_, created) = call(&app, "POST", "/sessions", None).await;
    let id = created["session_id"].as_str().unwrap();
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/utterance"),
        Some("{\"txt\":1}"),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].is_string());
}
