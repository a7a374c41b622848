//! JSON-over-HTTP service backing the interactive workbench.
//!
//! | method | path                   | body / query                                  |
//! |--------|------------------------|-----------------------------------------------|
//! | POST   | `/api/predict`         | `{text, tau?}`                                |
//! | POST   | `/api/counterfactual`  | `{text, target_class, target_or_better?, ...}` → SSE |
//! | POST   | `/api/ablation`        | `{text, modifications?, target_classes?, ...}` |
//! | GET    | `/api/registry`        |                                               |
//! | GET    | `/api/runs`            | `?status=&target=&category=`                  |
//! | GET    | `/api/runs/{id}`       |                                               |
//!
//! The counterfactual endpoint streams one `step` event per transformation
//! record (data: the record as JSON) and then a `done` event whose data is
//! the run without its `records`. The run is persisted before `done` is
//! sent, so the step payloads plus the summary reassemble exactly the run
//! served by `/api/runs/{id}`. Errors are `{"error": {"code", "message"}}`
//! with status 400 (bad request), 404 (unknown run) or 502 (upstream
//! failure).

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use counterframe_core::engine::{CounterfactualEngine, EngineConfig, TargetSentiment};
use counterframe_core::registry::{Category, ModificationType, REGISTRY};
use counterframe_core::{
    ClassThresholds, ClientError, RunStatus, SelectionStrategy, SentimentClass, SentimentProbs,
};
use futures::Stream;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{mpsc, Semaphore};

use crate::config::{SharedOracle, SharedRewriter};
use crate::store::{RunFilter, RunStore};

#[derive(Clone)]
pub struct AppState {
    pub oracle: SharedOracle,
    pub rewriter: SharedRewriter,
    /// Defaults for fields a request leaves out (target excluded).
    pub defaults: EngineConfig,
    pub store: Arc<RunStore>,
    pub limiter: Arc<Semaphore>,
    pub record_timestamps: bool,
}

impl AppState {
    pub fn new(
        oracle: SharedOracle,
        rewriter: SharedRewriter,
        defaults: EngineConfig,
        store: Arc<RunStore>,
        workers: usize,
    ) -> Self {
        Self {
            oracle,
            rewriter,
            defaults,
            store,
            limiter: Arc::new(Semaphore::new(workers.max(1))),
            record_timestamps: false,
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/predict", post(predict))
        .route("/api/counterfactual", post(counterfactual))
        .route("/api/ablation", post(ablation))
        .route("/api/registry", get(registry))
        .route("/api/runs", get(list_runs))
        .route("/api/runs/{id}", get(get_run))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<ClientError> for ApiError {
    fn from(e: ClientError) -> Self {
        let status = match e {
            ClientError::InvalidInput(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::BAD_GATEWAY,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

fn error_body(code: &str, message: &str) -> Value {
    json!({ "error": { "code": code, "message": message } })
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(error_body(&self.code, &self.message))).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn non_empty(text: &str) -> Result<(), ApiError> {
    if text.trim().is_empty() {
        Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_input", "text is empty"))
    } else {
        Ok(())
    }
}

fn thresholds(tau: Option<f64>, default: ClassThresholds) -> Result<ClassThresholds, ApiError> {
    match tau {
        None => Ok(default),
        Some(t) => ClassThresholds::new(t).map_err(|e| ApiError::bad_request(e.to_string())),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictRequest {
    text: String,
    #[serde(default)]
    tau: Option<f64>,
}

#[derive(Serialize)]
struct Prediction {
    probs: SentimentProbs,
    score: f64,
    class: SentimentClass,
}

async fn classify_text(
    state: &AppState,
    text: String,
    th: ClassThresholds,
) -> Result<Prediction, ApiError> {
    let oracle = state.oracle.clone();
    let probs = blocking(move || oracle.predict(&text)).await??;
    let score = probs.compound();
    let class = th.classify(score).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Prediction { probs, score, class })
}

async fn predict(State(state): State<AppState>, body: Bytes) -> Result<Json<Prediction>, ApiError> {
    let req: PredictRequest = parse_body(&body)?;
    non_empty(&req.text)?;
    let th = thresholds(req.tau, state.defaults.thresholds)?;
    Ok(Json(classify_text(&state, req.text, th).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CounterfactualRequest {
    text: String,
    target_class: SentimentClass,
    #[serde(default)]
    target_or_better: bool,
    #[serde(default)]
    original_class: Option<SentimentClass>,
    #[serde(default)]
    category_order: Option<Vec<Category>>,
    #[serde(default)]
    selection: Option<SelectionStrategy>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    pre_check: Option<bool>,
    #[serde(default)]
    event_id: Option<String>,
}

async fn counterfactual(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let req: CounterfactualRequest = parse_body(&body)?;
    non_empty(&req.text)?;
    let d = &state.defaults;
    let category_order = req.category_order.unwrap_or_else(|| d.category_order.clone());
    let mut sorted = category_order.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != category_order.len() {
        return Err(ApiError::bad_request("category_order repeats a category"));
    }
    let config = EngineConfig {
        target: TargetSentiment {
            class: req.target_class,
            or_better: req.target_or_better,
        },
        category_order,
        thresholds: thresholds(req.tau, d.thresholds)?,
        selection: req.selection.unwrap_or(d.selection),
        seed: req.seed.unwrap_or(d.seed),
        pre_check: req.pre_check.unwrap_or(d.pre_check),
    };
    let permit = state
        .limiter
        .clone()
        .acquire_owned()
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let original_class = match req.original_class {
        Some(c) => c,
        None => classify_text(&state, req.text.clone(), config.thresholds).await?.class,
    };

    let (tx, rx) = mpsc::channel::<Event>(64);
    let st = state.clone();
    let text = req.text;
    let event_id = req.event_id;
    tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let run_id = st.store.next_run_id();
        let engine = CounterfactualEngine::new(&*st.rewriter, &*st.oracle, config);
        let started = st.record_timestamps.then(now_ms);
        let result = engine.generate_with(&run_id, &text, original_class, &mut |record| {
            let data = serde_json::to_string(record).expect("records serialize");
            let _ = tx.blocking_send(Event::default().event("step").data(data));
        });
        let mut run = match result {
            Ok(run) => run,
            Err(e) => {
                let body = error_body("invalid_input", &e.to_string()).to_string();
                let _ = tx.blocking_send(Event::default().event("error").data(body));
                return;
            }
        };
        run.event_id = event_id;
        run.provenance.started_at_ms = started;
        run.provenance.finished_at_ms = st.record_timestamps.then(now_ms);
        if let Err(e) = st.store.persist(&run) {
            tracing::error!(run_id = %run.run_id, error = %e, "persisting run failed");
            let body = error_body("store_write_failed", &e.to_string()).to_string();
            let _ = tx.blocking_send(Event::default().event("error").data(body));
            return;
        }
        let mut summary = serde_json::to_value(&run).expect("runs serialize");
        summary.as_object_mut().expect("run is an object").remove("records");
        let _ = tx.blocking_send(Event::default().event("done").data(summary.to_string()));
    });

    let stream = futures::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|e| (Ok(e), rx))
    });
    Ok(Sse::new(stream))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AblationRequest {
    text: String,
    #[serde(default)]
    original_class: Option<SentimentClass>,
    #[serde(default)]
    modifications: Option<Vec<String>>,
    #[serde(default)]
    target_classes: Option<Vec<SentimentClass>>,
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    event_id: Option<String>,
}

async fn ablation(State(state): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: AblationRequest = parse_body(&body)?;
    non_empty(&req.text)?;
    let th = thresholds(req.tau, state.defaults.thresholds)?;
    let mods: Vec<&'static ModificationType> = match &req.modifications {
        None => REGISTRY.iter().collect(),
        Some(keys) => keys
            .iter()
            .map(|k| {
                ModificationType::by_key(k).ok_or_else(|| {
                    ApiError::new(
                        StatusCode::BAD_REQUEST,
                        "unknown_modification",
                        format!("unknown modification `{k}`"),
                    )
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let targets = req
        .target_classes
        .unwrap_or_else(|| vec![SentimentClass::Neutral, SentimentClass::Positive]);
    if targets.is_empty() {
        return Err(ApiError::bad_request("target_classes is empty"));
    }
    let _permit = state
        .limiter
        .clone()
        .acquire_owned()
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let original_class = match req.original_class {
        Some(c) => c,
        None => classify_text(&state, req.text.clone(), th).await?.class,
    };
    let st = state.clone();
    let text = req.text;
    let event_id = req.event_id;
    let rows = blocking(move || {
        let config = EngineConfig {
            thresholds: th,
            ..st.defaults.clone()
        };
        let engine = CounterfactualEngine::new(&*st.rewriter, &*st.oracle, config);
        engine.ablate(&text, original_class, &mods, &targets)
    })
    .await?
    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_input", e.to_string()))?;
    let rows: Vec<_> = rows
        .into_iter()
        .map(|mut r| {
            r.event_id = event_id.clone();
            r
        })
        .collect();
    Ok(Json(json!({ "original_class": original_class, "results": rows })))
}

async fn registry(State(state): State<AppState>) -> Json<Value> {
    let categories: Vec<Value> = Category::ALL
        .iter()
        .map(|c| {
            let mods: Vec<Value> = c
                .modifications()
                .map(|m| json!({ "key": m.key, "label": m.label, "instruction": m.instruction }))
                .collect();
            json!({ "name": c.as_str(), "label": c.label(), "modifications": mods })
        })
        .collect();
    Json(json!({
        "categories": categories,
        "default_category_order": state.defaults.category_order,
        "thresholds": state.defaults.thresholds,
    }))
}

async fn list_runs(
    State(state): State<AppState>,
    query: Result<Query<BTreeMap<String, String>>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let mut filter = RunFilter::default();
    for (k, v) in &q {
        let bad = || ApiError::bad_request(format!("invalid {k} `{v}`"));
        match k.as_str() {
            "status" => filter.status = Some(RunStatus::parse(v).ok_or_else(bad)?),
            "target" => filter.target = Some(SentimentClass::parse(v).ok_or_else(bad)?),
            "category" => filter.category = Some(Category::parse(v).ok_or_else(bad)?),
            _ => return Err(ApiError::bad_request(format!("unknown query parameter `{k}`"))),
        }
    }
    let store = state.store.clone();
    let runs = blocking(move || store.list(&filter))
        .await?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "runs": runs })))
}

async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let store = state.store.clone();
    let lookup = id.clone();
    let run = blocking(move || store.get(&lookup))
        .await?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    match run {
        Some(run) => Ok(Json(run).into_response()),
        None => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no run with id `{id}`"),
        )),
    }
}
