//! HTTP routes. Each session is guarded by its own async mutex; engine work
//! runs on the blocking pool while the lock is held, so transitions within a
//! session are serialized and sessions never block each other.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use cpbo_core::{Policy, Winner};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex as AsyncMutex;

use crate::constraint::Registry;
use crate::error::ApiError;
use crate::session::{
    BestPayload, ChoiceResponse, HistoryPayload, NewSession, PairPayload, Session, Status,
};
use crate::space::DesignSpace;
use crate::store::{valid_id, Store};

#[derive(Debug, Clone)]
pub struct Settings {
    pub default_budget: usize,
    pub default_warm_points: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self { default_budget: 50, default_warm_points: 200 }
    }
}

type Slot = Arc<AsyncMutex<Option<Session>>>;

pub struct AppState {
    pub store: Store,
    pub registry: Registry,
    pub settings: Settings,
    slots: Mutex<HashMap<String, Slot>>,
}

impl AppState {
    pub fn new(store: Store, registry: Registry, settings: Settings) -> Self {
        Self { store, registry, settings, slots: Mutex::new(HashMap::new()) }
    }

    fn slot(&self, id: &str) -> Result<Slot, ApiError> {
        let mut slots = self.slots.lock().expect("slot table poisoned");
        if let Some(s) = slots.get(id) {
            return Ok(s.clone());
        }
        if !self.store.exists(id) {
            return Err(ApiError::not_found(format!("no session {id:?}")));
        }
        let s: Slot = Arc::new(AsyncMutex::new(None));
        slots.insert(id.to_string(), s.clone());
        Ok(s)
    }

    /// Run `f` on the session with its lock held, loading it from disk on
    /// first use.
    async fn with_session<T, F>(self: &Arc<Self>, id: String, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&AppState, &mut Session) -> Result<T, ApiError> + Send + 'static,
    {
        let slot = self.slot(&id)?;
        let mut guard = slot.lock_owned().await;
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            if guard.is_none() {
                *guard = Some(state.store.load(&id)?);
            }
            f(&state, guard.as_mut().expect("loaded above"))
        })
        .await
        .map_err(|e| ApiError::internal(format!("session task failed: {e}")))?
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub design_space: Option<DesignSpace>,
    pub budget: Option<usize>,
    pub warm_points: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<Policy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub status: Status,
    pub budget: usize,
    pub seed: u64,
    pub pair: PairPayload,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceRequest {
    pub nonce: String,
    pub winner: Winner,
}

fn parse_body<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn checked_id(id: String) -> Result<String, ApiError> {
    if valid_id(&id) {
        Ok(id)
    } else {
        Err(ApiError::not_found(format!("no session {id:?}")))
    }
}

fn log_pair(pair: &PairPayload) {
    let [a, b] = &pair.candidates;
    tracing::info!(
        session = %pair.session_id,
        n = pair.n,
        p_i = ?a.feasibility_probability,
        p_j = ?b.feasibility_probability,
        "pair issued"
    );
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let seed = req.seed.unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
    let new = NewSession {
        design_space: req.design_space.unwrap_or_else(DesignSpace::banner_colors),
        budget: req.budget.unwrap_or(state.settings.default_budget),
        warm_points: req.warm_points.unwrap_or(state.settings.default_warm_points),
        seed,
        policy: req.policy.unwrap_or(Policy::Euboc),
    };
    new.design_space.validate(&state.registry)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let st = state.clone();
    let session = tokio::task::spawn_blocking(move || {
        let session = Session::create(id, new, &st.registry)?;
        st.store.save(&session)?;
        Ok::<_, ApiError>(session)
    })
    .await
    .map_err(|e| ApiError::internal(format!("session task failed: {e}")))??;
    let pair = session.pair()?;
    log_pair(&pair);
    let response = CreateResponse {
        session_id: session.id().to_string(),
        status: session.meta.status,
        budget: session.meta.budget,
        seed,
        pair,
    };
    state
        .slots
        .lock()
        .expect("slot table poisoned")
        .insert(response.session_id.clone(), Arc::new(AsyncMutex::new(Some(session))));
    tracing::info!(session = %response.session_id, "session created");
    Ok((StatusCode::CREATED, Json(response)))
}

async fn get_pair(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<PairPayload>, ApiError> {
    let id = checked_id(id)?;
    state.with_session(id, |_, s| s.pair()).await.map(Json)
}

async fn submit_choice(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ChoiceResponse>, ApiError> {
    let id = checked_id(id)?;
    let req: ChoiceRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid choice body: {e}")))?;
    let response = state
        .with_session(id, move |st, s| {
            let (next, response) = s.submit(&req.nonce, req.winner, &st.registry)?;
            if let Some(next) = next {
                st.store.save(&next)?;
                *s = next;
            }
            Ok(response)
        })
        .await?;
    if let Some(pair) = &response.pair {
        log_pair(pair);
    }
    Ok(Json(response))
}

async fn get_best(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<BestPayload>, ApiError> {
    let id = checked_id(id)?;
    state.with_session(id, |_, s| Ok(s.best())).await.map(Json)
}

async fn get_history(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<HistoryPayload>, ApiError> {
    let id = checked_id(id)?;
    state.with_session(id, |_, s| Ok(s.history())).await.map(Json)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/pair", get(get_pair))
        .route("/sessions/{id}/choice", post(submit_choice))
        .route("/sessions/{id}/best", get(get_best))
        .route("/sessions/{id}/history", get(get_history))
        .fallback(fallback)
        .with_state(state)
}
