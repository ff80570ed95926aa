//! HTTP endpoints over the learner loop. Errors are JSON `{code, message}`.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard, PoisonError, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use skillrec_core::catalog::Level;
use skillrec_core::fit_model::predict_fit;
use skillrec_core::learner::{Engine, LearnerError, LearnerProfile, Target};
use skillrec_core::recommender::{init_preferences, FeatureVectorX, LearnerContext, PreferenceMatrixP};
use skillrec_core::skill_mining::SkillRecord;

use crate::store::{Store, StoreError};

/// Fit probability used for every video when the store has no fit model.
pub const DEFAULT_FIT_PROBABILITY: f64 = 0.5;

type UserSlot = Arc<Mutex<LearnerProfile>>;

/// Shared server state. The catalog and models are read-only; each profile
/// sits behind its own mutex so writes to one user never block another.
pub struct AppState {
    store: Store,
    skills: Vec<SkillRecord>,
    engine: Engine,
    users: RwLock<BTreeMap<String, UserSlot>>,
}

impl AppState {
    pub fn load(store: Store) -> Result<Self, StoreError> {
        let snap = store.snapshot()?;
        let features = match &snap.fit_model {
            Some(model) => snap.catalog.feature_vectors(|f| predict_fit(model, f).probability),
            None => snap.catalog.feature_vectors(|_| DEFAULT_FIT_PROBABILITY),
        };
        log::info!(
            "loaded {} skills, {} videos, {} users from {}",
            snap.skills.len(),
            snap.catalog.len(),
            snap.users.len(),
            store.root().display()
        );
        let users = snap
            .users
            .into_iter()
            .map(|u| (u.id.clone(), Arc::new(Mutex::new(u))))
            .collect();
        Ok(Self {
            store,
            skills: snap.skills,
            engine: Engine::new(snap.catalog, features),
            users: RwLock::new(users),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    fn user(&self, id: &str) -> Result<UserSlot, ApiError> {
        read(&self.users)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "user_not_found", format!("no user {id:?}")))
    }

    /// Applies `op` to a copy of the profile, persists the copy and only then
    /// publishes it, so a failed request leaves both memory and disk as they were.
    fn mutate<T>(
        &self,
        id: &str,
        op: impl FnOnce(&Engine, &mut LearnerProfile) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let slot = self.user(id)?;
        let mut current = lock(&slot);
        let mut next = current.clone();
        let out = op(&self.engine, &mut next)?;
        if next != *current {
            self.store.save_user(&next)?;
            *current = next;
        }
        Ok(out)
    }
}

// Mutations happen on clones, so a poisoned lock still guards consistent data.
fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(PoisonError::into_inner)
}

fn read<T>(m: &RwLock<T>) -> std::sync::RwLockReadGuard<'_, T> {
    m.read().unwrap_or_else(PoisonError::into_inner)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody { code: code.into(), message: message.into() },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<LearnerError> for ApiError {
    fn from(e: LearnerError) -> Self {
        let (status, code) = match &e {
            LearnerError::UnknownTarget(_) => (StatusCode::NOT_FOUND, "target_not_found"),
            LearnerError::DuplicateTarget(_) => (StatusCode::CONFLICT, "duplicate_target"),
            LearnerError::SkillMastered(_) => (StatusCode::CONFLICT, "skill_mastered"),
            LearnerError::NoCandidates { .. } => (StatusCode::GONE, "no_candidates"),
            LearnerError::UnknownVideo(_) => (StatusCode::NOT_FOUND, "unknown_video"),
            LearnerError::RatingOutOfRange(_) | LearnerError::SatisfactionOutOfRange(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "rating_out_of_range")
            }
            LearnerError::Recommender(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        log::error!("store write failed: {e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", e.to_string())
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Deserialize)]
struct NewUser {
    occupation: String,
    location: String,
    education: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedUser {
    pub user_id: String,
    pub p: PreferenceMatrixP,
}

/// Levels arrive as `0..=2` or as their names.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LevelInput {
    Index(u64),
    Name(Level),
}

#[derive(Debug, Deserialize)]
struct NewTarget {
    skill: String,
    level: LevelInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetView {
    pub skill: String,
    pub level: Level,
    pub mastered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationView {
    pub video_id: String,
    pub skill: String,
    pub level: Level,
    pub title: String,
    pub url: String,
    pub x: FeatureVectorX,
    pub score: f64,
}

#[derive(Debug, Deserialize)]
struct NewRating {
    video_id: String,
    stars: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingView {
    pub skill: String,
    pub level: Level,
    pub mastered: bool,
    pub p: PreferenceMatrixP,
}

#[derive(Debug, Deserialize)]
struct NewSkip {
    video_id: String,
}

async fn list_skills(State(state): State<Arc<AppState>>) -> Json<Vec<SkillRecord>> {
    Json(state.skills.clone())
}

async fn create_user(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: NewUser = parse_body(&body)?;
    let context = LearnerContext::new(&req.occupation, &req.location, &req.education);

    // Holding the map's write lock serializes creations, so each new user sees
    // every earlier one as a potential peer.
    let mut users = state.users.write().unwrap_or_else(PoisonError::into_inner);
    let peers: Vec<(LearnerContext, PreferenceMatrixP)> = users
        .values()
        .map(|slot| {
            let u = lock(slot);
            (u.context.clone(), u.p)
        })
        .collect();
    let p0 = init_preferences(&context, peers.iter().map(|(c, p)| (c, p)));
    let id = uuid::Uuid::new_v4().simple().to_string();
    let profile = LearnerProfile::new(id.clone(), context, p0);
    state.store.save_user(&profile)?;
    users.insert(id.clone(), Arc::new(Mutex::new(profile)));
    Ok((StatusCode::CREATED, Json(CreatedUser { user_id: id, p: p0 })))
}

async fn get_user(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<LearnerProfile>, ApiError> {
    let slot = state.user(&id)?;
    let profile = lock(&slot).clone();
    Ok(Json(profile))
}

async fn add_target(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<TargetView>, ApiError> {
    let req: NewTarget = parse_body(&body)?;
    let level = match req.level {
        LevelInput::Name(level) => level,
        LevelInput::Index(i) => *Level::ALL
            .get(i as usize)
            .ok_or_else(|| ApiError::bad_request(format!("level {i} is outside 0..=2")))?,
    };
    state.user(&id)?;
    if !state.skills.iter().any(|s| s.name == req.skill) {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "skill_not_found",
            format!("no skill {:?}", req.skill),
        ));
    }
    state.mutate(&id, |_, profile| {
        profile.add_target(&req.skill, level)?;
        Ok(TargetView { skill: req.skill.clone(), level, mastered: false })
    })
    .map(Json)
}

async fn recommend(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Result<Json<RecommendationView>, ApiError> {
    let Query(params) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let skill = params
        .get("skill")
        .ok_or_else(|| ApiError::bad_request("missing query parameter `skill`"))?;
    state
        .mutate(&id, |engine, profile| {
            let rec = engine.next_recommendation(profile, skill)?;
            let Target { level, .. } = profile.targets[skill];
            let video = engine.catalog.get(&rec.video_id).expect("recommended video is in the catalog");
            Ok(RecommendationView {
                video_id: rec.video_id,
                skill: rec.skill,
                level,
                title: video.title.clone(),
                url: video.url.clone(),
                x: rec.x,
                score: rec.score,
            })
        })
        .map(Json)
}

async fn rate(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<RatingView>, ApiError> {
    let req: NewRating = parse_body(&body)?;
    state
        .mutate(&id, |engine, profile| {
            let out = engine.record_rating(profile, &req.video_id, req.stars, now_secs())?;
            Ok(RatingView {
                skill: out.skill,
                level: out.level,
                mastered: out.mastered,
                p: out.p,
            })
        })
        .map(Json)
}

async fn skip(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<StatusCode, ApiError> {
    let req: NewSkip = parse_body(&body)?;
    state.mutate(&id, |engine, profile| Ok(engine.skip_recommendation(profile, &req.video_id)?))?;
    Ok(StatusCode::NO_CONTENT)
}

/// Permissive CORS so a dashboard served from another origin can call the API.
async fn cors(req: Request, next: Next) -> Response {
    let preflight = req.method() == Method::OPTIONS;
    let mut resp = if preflight {
        StatusCode::NO_CONTENT.into_response()
    } else {
        next.run(req).await
    };
    let h = resp.headers_mut();
    h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    if preflight {
        h.insert(header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, POST, OPTIONS"));
        h.insert(header::ACCESS_CONTROL_ALLOW_HEADERS, HeaderValue::from_static("content-type"));
    }
    resp
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/skills", get(list_skills))
        .route("/users", post(create_user))
        .route("/users/{id}", get(get_user))
        .route("/users/{id}/skills", post(add_target))
        .route("/users/{id}/recommendation", get(recommend))
        .route("/users/{id}/ratings", post(rate))
        .route("/users/{id}/skips", post(skip))
        .fallback(not_found)
        .layer(middleware::from_fn(cors))
        .with_state(state)
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// A server running on its own runtime thread; stops when dropped.
pub struct BackgroundServer {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl BackgroundServer {
    /// Loads the store and serves it on `addr` (port 0 picks a free port).
    pub fn start(store: Store, addr: SocketAddr) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let state = Arc::new(AppState::load(store)?);
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener)?;
                serve(listener, state, async {
                    let _ = stopped.await;
                })
                .await
            })
        });
        Ok(Self { addr, stop: Some(stop), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}
