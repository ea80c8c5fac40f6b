//! HTTP answering service.
//!
//! ```text
//! POST /v1/answer   {context?, context_id?, question, k?}
//!                   -> {answers: [{text, char_start, char_end, score}], model_id, latency_ms, context?}
//! GET  /v1/contexts -> {contexts: [{id, title, preview, length}]}
//! GET  /health      -> {status: "ok", model_id}
//! ```
//!
//! Offsets are code points into the NFC form of the context. Errors are
//! `{"error": message, "field"?: name}` with status 400, 404, 413 or 500.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::corpus::QaDataset;
use crate::inference::{InferenceError, Model};
use crate::text::{char_len, nfc};
use crate::tokenizer::TokenizerError;

/// Largest `k` a request may ask for.
pub const MAX_K: usize = 20;
const PREVIEW_CHARS: usize = 80;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ServedContext {
    pub id: String,
    pub title: String,
    /// NFC text.
    pub text: String,
}

/// Every paragraph of `ds` under its resolved id.
pub fn contexts_from_dataset(ds: &QaDataset) -> Vec<ServedContext> {
    let mut out = Vec::new();
    for (ai, article) in ds.data.iter().enumerate() {
        for (pi, p) in article.paragraphs.iter().enumerate() {
            out.push(ServedContext {
                id: p.resolved_id(ai, pi),
                title: article.title.clone(),
                text: nfc(&p.context),
            });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ServiceOptions {
    pub default_k: usize,
    pub max_answer_tokens: usize,
    pub max_context_chars: usize,
    pub cors_origins: Vec<String>,
}

struct Inner {
    model: Model,
    contexts: Vec<ServedContext>,
    by_id: HashMap<String, usize>,
    options: ServiceOptions,
}

/// Shared, read-only service state.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(model: Model, contexts: Vec<ServedContext>, options: ServiceOptions) -> Self {
        let by_id = contexts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        Self(Arc::new(Inner {
            model,
            contexts,
            by_id,
            options,
        }))
    }

    pub fn model_id(&self) -> &str {
        &self.0.model.model_id
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub fn router(state: AppState) -> Result<Router, ServiceError> {
    let mut app = Router::new()
        .route("/v1/answer", post(answer))
        .route("/v1/contexts", get(list_contexts))
        .route("/health", get(health));
    let origins = &state.0.options.cors_origins;
    if !origins.is_empty() {
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| ServiceError::CorsOrigin(o.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(values))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app.with_state(state))
}

/// Serves until ctrl-c.
pub async fn serve(app: Router, addr: SocketAddr) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    Ok(())
}

struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<&'static str>,
}

impl ApiError {
    fn bad_request(field: Option<&'static str>, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            field,
        }
    }

    fn internal() -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: "internal error".into(),
            field: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(field) = self.field {
            body["field"] = json!(field);
        }
        (self.status, Json(body)).into_response()
    }
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "model_id": state.model_id() }))
}

async fn list_contexts(State(state): State<AppState>) -> Json<Value> {
    let contexts: Vec<Value> = state
        .0
        .contexts
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "title": c.title,
                "preview": c.text.chars().take(PREVIEW_CHARS).collect::<String>(),
                "length": char_len(&c.text),
            })
        })
        .collect();
    Json(json!({ "contexts": contexts }))
}

struct AnswerRequest {
    question: String,
    context: Option<String>,
    context_id: Option<String>,
    k: Option<usize>,
}

fn optional_string(obj: &serde_json::Map<String, Value>, field: &'static str) -> Result<Option<String>, ApiError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ApiError::bad_request(Some(field), format!("{field} must be a string"))),
    }
}

fn parse_request(body: &[u8]) -> Result<AnswerRequest, ApiError> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(None, format!("malformed JSON body: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(ApiError::bad_request(None, "body must be a JSON object"));
    };
    let question = optional_string(&obj, "question")?
        .ok_or_else(|| ApiError::bad_request(Some("question"), "missing field question"))?;
    if question.trim().is_empty() {
        return Err(ApiError::bad_request(Some("question"), "question must not be empty"));
    }
    let context = optional_string(&obj, "context")?;
    let context_id = optional_string(&obj, "context_id")?;
    let k = match obj.get("k") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(k) if (1..=MAX_K as u64).contains(&k) => Some(k as usize),
            _ => {
                return Err(ApiError::bad_request(
                    Some("k"),
                    format!("k must be an integer between 1 and {MAX_K}"),
                ))
            }
        },
    };
    match (&context, &context_id) {
        (Some(_), Some(_)) => Err(ApiError::bad_request(
            Some("context"),
            "give exactly one of context and context_id, not both",
        )),
        (None, None) => Err(ApiError::bad_request(
            Some("context"),
            "give exactly one of context and context_id",
        )),
        _ => Ok(AnswerRequest {
            question,
            context,
            context_id,
            k,
        }),
    }
}

#[derive(Serialize)]
struct AnswerItem {
    text: String,
    char_start: usize,
    char_end: usize,
    score: f64,
}

async fn answer(State(state): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let started = Instant::now();
    let req = parse_request(&body)?;
    let inner = &state.0;
    let (context, echo) = match (req.context, req.context_id) {
        (Some(text), _) => {
            if text.trim().is_empty() {
                return Err(ApiError::bad_request(Some("context"), "context must not be empty"));
            }
            let cap = inner.options.max_context_chars;
            let len = char_len(&text);
            if len > cap {
                return Err(ApiError {
                    status: StatusCode::PAYLOAD_TOO_LARGE,
                    message: format!("context has {len} code points; the limit is {cap}"),
                    field: Some("context"),
                });
            }
            (nfc(&text), false)
        }
        (None, Some(id)) => {
            let &i = inner.by_id.get(&id).ok_or_else(|| ApiError {
                status: StatusCode::NOT_FOUND,
                message: format!("unknown context_id {id:?}"),
                field: Some("context_id"),
            })?;
            (inner.contexts[i].text.clone(), true)
        }
        (None, None) => unreachable!("parse_request requires one context field"),
    };
    let k = req.k.unwrap_or(inner.options.default_k);
    let max_answer_tokens = inner.options.max_answer_tokens;
    let worker = state.clone();
    let question = req.question;
    let ctx = context.clone();
    let result = tokio::task::spawn_blocking(move || worker.0.model.predict(&ctx, &question, k, max_answer_tokens))
        .await
        .map_err(|e| {
            tracing::error!(error = %e, "prediction task failed");
            ApiError::internal()
        })?;
    let predictions = match result {
        Ok(p) => p,
        Err(InferenceError::NoLegalPosition) => Vec::new(),
        Err(InferenceError::Tokenizer(e @ TokenizerError::QuestionTooLong { .. })) => {
            return Err(ApiError::bad_request(Some("question"), e.to_string()));
        }
        Err(e) => {
            tracing::error!(error = %e, "prediction failed");
            return Err(ApiError::internal());
        }
    };
    let answers: Vec<AnswerItem> = predictions
        .into_iter()
        .map(|p| AnswerItem {
            text: p.text,
            char_start: p.char_start,
            char_end: p.char_end,
            score: p.score,
        })
        .collect();
    let mut body = json!({
        "answers": answers,
        "model_id": state.model_id(),
        "latency_ms": started.elapsed().as_secs_f64() * 1e3,
    });
    if echo {
        body["context"] = json!(context);
    }
    Ok(Json(body))
}
