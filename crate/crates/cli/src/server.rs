//! HTTP chat service.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgdm_core::{ChatConfig, ChatSession, Organization};
use serde::Deserialize;
use serde_json::json;

pub struct AppState {
    org: Organization,
    config: ChatConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<ChatSession>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(org: Organization, config: ChatConfig) -> Arc<AppState> {
        Arc::new(AppState {
            org,
            config,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<ChatSession>>> {
        self.sessions
            .lock()
            .expect("session table poisoned")
            .get(id)
            .cloned()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/graph", get(graph))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(State(state): State<Arc<AppState>>) -> Response {
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    match ChatSession::new(id.clone(), state.org.clone(), state.config.clone()) {
        Ok(session) => {
            state
                .sessions
                .lock()
                .expect("session table poisoned")
                .insert(id.clone(), Arc::new(Mutex::new(session)));
            (StatusCode::CREATED, Json(json!({ "session_id": id }))).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Deserialize)]
struct UtteranceBody {
    text: String,
}

async fn utterance(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    let body: UtteranceBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                format!("expected {{\"text\": string}}: {e}"),
            )
        }
    };
    let Some(session) = state.session(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown session `{id}`"));
    };
    let turn = tokio::task::spawn_blocking(move || {
        session
            .lock()
            .expect("session poisoned")
            .chat_turn(&body.text)
    })
    .await;
    match turn {
        Ok(Ok(reply)) => Json(reply).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn graph(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(session) = state.session(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown session `{id}`"));
    };
    let text = session.lock().expect("session poisoned").graph.to_json();
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

/// Serves until interrupted.
pub async fn serve(state: Arc<AppState>, host: &str, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
