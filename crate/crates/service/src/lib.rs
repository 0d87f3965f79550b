//! HTTP API over one in-memory street network.
//!
//! | Route | Purpose |
//! |-------|---------|
//! | `GET /api/health` | liveness and initialization state |
//! | `GET /api/network` | nodes (with coordinates or nulls) and edges |
//! | `GET /api/accessibility[?scenario=<id>]` | baseline or scenario field |
//! | `POST /api/scenarios` | queue a scenario job |
//! | `GET /api/jobs/<id>` | job record |
//! | `GET /api/scenarios/<id>/comparison` | comparison report |
//!
//! Every number served is taken from the same engine output the CLI writes
//! to disk; nothing is recomputed or rounded here.

mod jobs;

use std::net::SocketAddr;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use accesswalk_core::ScenarioDocument;

pub use jobs::{BaselineStatus, Engine, JobRecord, JobState, ServiceConfig, Submission};

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn not_found(what: &str, id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("unknown {what} {id:?}"))
}

pub fn router(engine: Engine) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/network", get(network))
        .route("/api/accessibility", get(accessibility))
        .route("/api/scenarios", post(post_scenario))
        .route("/api/jobs/{id}", get(job))
        .route("/api/scenarios/{id}/comparison", get(comparison))
        .with_state(engine)
}

/// Binds `addr` and serves until ctrl-c. Bind failures are returned before
/// any request is accepted.
pub async fn serve(addr: SocketAddr, engine: Engine) -> std::io::Result<()> {
    serve_on(tokio::net::TcpListener::bind(addr).await?, engine).await
}

/// Serves on an already bound listener until ctrl-c.
pub async fn serve_on(listener: tokio::net::TcpListener, engine: Engine) -> std::io::Result<()> {
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health(State(engine): State<Engine>) -> Json<serde_json::Value> {
    let baseline = match engine.shared.baseline() {
        BaselineStatus::NotRequested => "not_requested",
        BaselineStatus::Pending => "pending",
        BaselineStatus::Ready(_) => "ready",
        BaselineStatus::Failed(_) => "failed",
    };
    Json(json!({
        "status": "ok",
        "initialized": engine.shared.initialized(),
        "baseline": baseline,
        "node_count": engine.network().node_count(),
    }))
}

#[derive(Serialize)]
struct NetworkNode<'a> {
    id: &'a str,
    x: Option<f64>,
    y: Option<f64>,
}

#[derive(Serialize)]
struct NetworkDocument<'a> {
    node_count: usize,
    edge_count: usize,
    has_coordinates: bool,
    nodes: Vec<NetworkNode<'a>>,
    edges: Vec<(&'a str, &'a str)>,
}

async fn network(State(engine): State<Engine>) -> ApiResult<Response> {
    if !engine.shared.initialized() {
        return Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            "service is initializing".into(),
        ));
    }
    let net = engine.network();
    let coords = net.coordinates();
    let doc = NetworkDocument {
        node_count: net.node_count(),
        edge_count: net.edge_count(),
        has_coordinates: coords.is_some(),
        nodes: net
            .nodes()
            .map(|u| NetworkNode {
                id: net.label(u),
                x: coords.map(|c| c[u.index()].x),
                y: coords.map(|c| c[u.index()].y),
            })
            .collect(),
        edges: net
            .edges()
            .map(|(u, v)| (net.label(u), net.label(v)))
            .collect(),
    };
    Ok(Json(doc).into_response())
}

#[derive(Deserialize)]
struct AccessibilityQuery {
    scenario: Option<String>,
}

fn finished_result(engine: &Engine, id: &str) -> ApiResult<std::sync::Arc<jobs::JobResult>> {
    let record = engine
        .shared
        .job(id)
        .ok_or_else(|| not_found("scenario", id))?;
    match record.state {
        JobState::Done => engine
            .shared
            .result(id)
            .ok_or_else(|| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "result missing".into())),
        JobState::Failed => Err(ApiError(
            StatusCode::CONFLICT,
            format!("job {id} failed: {}", record.error.unwrap_or_default()),
        )),
        state => Err(ApiError(
            StatusCode::CONFLICT,
            format!(
                "job {id} is not finished (state {})",
                json!(state).as_str().unwrap_or("")
            ),
        )),
    }
}

async fn accessibility(
    State(engine): State<Engine>,
    Query(q): Query<AccessibilityQuery>,
) -> ApiResult<Response> {
    if let Some(id) = q.scenario {
        let result = finished_result(&engine, &id)?;
        return Ok(Json(&result.field).into_response());
    }
    match engine.shared.baseline() {
        BaselineStatus::Ready(doc) => Ok(Json(&*doc).into_response()),
        BaselineStatus::Pending => Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            "baseline accessibility is still being computed".into(),
        )),
        BaselineStatus::NotRequested => Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            "baseline accessibility was not precomputed (start with --precompute)".into(),
        )),
        BaselineStatus::Failed(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e)),
    }
}

async fn post_scenario(
    State(engine): State<Engine>,
    body: Result<Json<ScenarioDocument>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Submission>)> {
    let Json(doc) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    let submission = engine
        .submit(doc)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok((StatusCode::ACCEPTED, Json(submission)))
}

async fn job(State(engine): State<Engine>, Path(id): Path<String>) -> ApiResult<Json<JobRecord>> {
    engine
        .shared
        .job(&id)
        .map(Json)
        .ok_or_else(|| not_found("job", &id))
}

async fn comparison(State(engine): State<Engine>, Path(id): Path<String>) -> ApiResult<Response> {
    let result = finished_result(&engine, &id)?;
    Ok(Json(&result.report).into_response())
}
