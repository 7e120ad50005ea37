//! HTTP + JSON routes over a [`Gateway`].

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use portalis_core::profile::SessionError;
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};

use crate::service::{Gateway, GatewayError, UpdateRequest};

type Shared = Arc<Gateway>;
type ApiResult = Result<Json<JsonValue>, GatewayError>;

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let status = match &self {
            GatewayError::Session(SessionError::UnknownToken | SessionError::SessionClosed | SessionError::AlreadyClosed) => {
                StatusCode::UNAUTHORIZED
            }
            GatewayError::Forbidden => StatusCode::FORBIDDEN,
            GatewayError::NotFound(_)
            | GatewayError::UnknownObject(_)
            | GatewayError::UnknownProfile(_)
            | GatewayError::UnknownRepository(_) => StatusCode::NOT_FOUND,
            GatewayError::BadRequest(_) => StatusCode::BAD_REQUEST,
            GatewayError::Engine(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for GatewayError {
    fn from(r: JsonRejection) -> Self {
        GatewayError::BadRequest(r.body_text())
    }
}

#[derive(Deserialize)]
struct TokenQuery {
    token: String,
}

#[derive(Deserialize)]
struct OpenSession {
    profile: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SubmitEvent {
    token: String,
    name: String,
    #[serde(default)]
    args: BTreeMap<String, JsonValue>,
    idempotency_key: Option<String>,
}

#[derive(Deserialize)]
struct AgentRun {
    tick: u64,
}

#[derive(Deserialize)]
struct ManualRefresh {
    page: String,
}

fn to_json<T: serde::Serialize>(value: T) -> ApiResult {
    Ok(Json(serde_json::to_value(value).expect("responses serialize")))
}

async fn open_session(State(g): State<Shared>, body: Result<Json<OpenSession>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    to_json(g.open_session(&body.profile)?)
}

async fn close_session(State(g): State<Shared>, Path(token): Path<String>) -> ApiResult {
    g.close_session(&token)?;
    Ok(Json(json!({ "closed": true })))
}

async fn list_pages(State(g): State<Shared>, Query(q): Query<TokenQuery>) -> ApiResult {
    Ok(Json(json!({ "pages": g.list_pages(&q.token)? })))
}

async fn get_page(State(g): State<Shared>, Path(id): Path<String>, Query(q): Query<TokenQuery>) -> ApiResult {
    to_json(g.get_page(&q.token, &id)?)
}

async fn submit_event(State(g): State<Shared>, body: Result<Json<SubmitEvent>, JsonRejection>) -> ApiResult {
    let Json(b) = body?;
    to_json(g.submit_event(&b.token, &b.name, &b.args, b.idempotency_key.as_deref())?)
}

async fn metadata(State(g): State<Shared>, Path(id): Path<String>, Query(q): Query<TokenQuery>) -> ApiResult {
    to_json(g.metadata(&q.token, &id)?)
}

async fn update(
    State(g): State<Shared>,
    Path(repo): Path<String>,
    body: Result<Json<UpdateRequest>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    to_json(g.update(&repo, &body)?)
}

async fn agent_run(State(g): State<Shared>, body: Result<Json<AgentRun>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    Ok(Json(json!({ "refreshed": g.run_agent(body.tick) })))
}

async fn agent_refresh(State(g): State<Shared>, body: Result<Json<ManualRefresh>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    g.manual_refresh(&body.page)?;
    Ok(Json(json!({ "refreshed": [body.page] })))
}

async fn profiles(State(g): State<Shared>) -> ApiResult {
    let list: Vec<JsonValue> = g
        .profiles()
        .into_iter()
        .map(|(name, rank)| json!({ "name": name, "rank": rank }))
        .collect();
    Ok(Json(json!({ "profiles": list })))
}

pub fn router(gateway: Shared) -> Router {
    Router::new()
        .route("/profiles", get(profiles))
        .route("/session", post(open_session))
        .route("/session/{token}", delete(close_session))
        .route("/pages", get(list_pages))
        .route("/page/{id}", get(get_page))
        .route("/event", post(submit_event))
        .route("/meta/{id}", get(metadata))
        .route("/warehouse/{repo}/update", post(update))
        .route("/agent/run", post(agent_run))
        .route("/agent/refresh", post(agent_refresh))
        .with_state(gateway)
}

/// Serves until ctrl-c. The bound address is printed first so that a
/// caller passing port 0 can discover it.
pub async fn serve(gateway: Gateway, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(gateway)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
