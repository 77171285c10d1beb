//! HTTP service for interactive proving sessions, plus a stub completion
//! endpoint for local testing.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mmprove_core::database::Database;
use mmprove_core::proofdata::{tree_records, ProofStepRecord, DEFAULT_EOT};
use mmprove_core::tactic::{apply_tactic, parse_tactic};
use mmprove_core::{Goal, TacticError};
use mmprove_prover::policy::{
    Choice, CompletionRequest, CompletionResponse, PolicyError, ScoreResponse, SuggestRequest,
};
use mmprove_prover::{
    run_attempts, PerfectOutcomeOracle, PriorityMode, Problem, ReplayOracle, ScoredTactic, Scorer, SearchParams, Suggester,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::session::{unix_now, ExportFormat, Session, SessionError, TreeView, SCHEMA_VERSION};

/// Error body: `{"error": {"kind": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            kind: kind.into(),
            message: message.into(),
        }
    }

    fn not_found(what: &str, id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} `{id}`"))
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> ApiError {
        let message = e.to_string();
        match e {
            SessionError::UnknownGoal(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_goal", message),
            SessionError::NotOpen(_) => ApiError::new(StatusCode::CONFLICT, "goal_not_open", message),
            SessionError::NoOpenGoal => ApiError::new(StatusCode::CONFLICT, "no_open_goal", message),
            SessionError::NothingToUndo => ApiError::new(StatusCode::CONFLICT, "nothing_to_undo", message),
            SessionError::NothingToRedo => ApiError::new(StatusCode::CONFLICT, "nothing_to_redo", message),
            SessionError::NotProved => ApiError::new(StatusCode::CONFLICT, "not_proved", message),
            SessionError::Tactic(t) => tactic_error(&t),
            SessionError::Export(_) | SessionError::Verify(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "export_failed", message)
            }
        }
    }
}

fn tactic_error(e: &TacticError) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, &format!("tactic_{}", e.kind()), e.to_string())
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "version": SCHEMA_VERSION,
            "error": { "kind": self.kind, "message": self.message },
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Cancelled,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepView {
    pub goal: String,
    pub tactic: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobResult {
    pub proved: bool,
    pub expansions: usize,
    /// The found proof's steps, parents first, ready to apply in order.
    pub steps: Vec<StepView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobView {
    pub version: u32,
    pub id: String,
    pub session: String,
    pub goal: usize,
    pub status: JobStatus,
    pub result: Option<JobResult>,
    pub error: Option<String>,
}

struct Job {
    cancel: AtomicBool,
    view: Mutex<JobView>,
}

/// Shared service state. The library is immutable and shared by every
/// worker; each session is behind its own lock.
pub struct AppState {
    pub db: &'static Database,
    pub suggester: Arc<dyn Suggester>,
    pub scorer: Option<Arc<dyn Scorer>>,
    pub config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(
        db: &'static Database,
        suggester: Arc<dyn Suggester>,
        scorer: Option<Arc<dyn Scorer>>,
        config: ServiceConfig,
    ) -> AppState {
        AppState {
            db,
            suggester,
            scorer,
            config,
            sessions: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn fresh_id(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    fn sweep(&self, sessions: &mut HashMap<String, Arc<Mutex<Session>>>) {
        let now = unix_now();
        let ttl = self.config.session_ttl_secs;
        sessions.retain(|_, s| s.lock().map(|s| now.saturating_sub(s.touched) <= ttl).unwrap_or(false));
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        let mut sessions = self.sessions.lock().expect("session map lock");
        self.sweep(&mut sessions);
        sessions.get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }
}

fn lock(s: &Mutex<Session>) -> std::sync::MutexGuard<'_, Session> {
    let mut g = s.lock().expect("session lock");
    g.touched = unix_now();
    g
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/suggest", post(suggest))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/redo", post(redo))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/search", post(start_search))
        .route("/jobs/{id}", get(get_job).delete(cancel_job))
        .route("/theorems", get(theorems))
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "version": SCHEMA_VERSION, "status": "ok" }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    /// `|- ...` or `[[ hyps ]] |- ...`.
    pub goal: Option<String>,
    /// A library theorem; citations are then limited to earlier assertions.
    pub theorem: Option<String>,
    pub label: Option<String>,
}

fn parse_goal(db: &Database, text: &str) -> Result<Goal, TacticError> {
    let t = text.trim();
    if t.starts_with("[[") {
        Goal::parse(db, t)
    } else {
        Goal::parse(db, &format!("[[ ]] {t}"))
    }
}

async fn create_session(State(st): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<TreeView>)> {
    let db = st.db;
    let (goal, ceiling, default_label) = match (&req.goal, &req.theorem) {
        (Some(g), None) => (parse_goal(db, g).map_err(|e| tactic_error(&e))?, None, None),
        (None, Some(label)) => {
            let a = db
                .assertion_by_label(label)
                .filter(|a| db.is_logical(a))
                .ok_or_else(|| ApiError::not_found("theorem", label))?;
            (Goal::of_assertion(db, a), Some(a.index), Some(label.clone()))
        }
        _ => return Err(ApiError::bad_request("give exactly one of `goal` or `theorem`")),
    };
    let id = st.fresh_id("s");
    let label = req.label.or(default_label).unwrap_or_else(|| format!("session-{id}"));
    let session = Session::new(db, &id, &label, goal, ceiling);
    let view = session.view();
    let mut sessions = st.sessions.lock().expect("session map lock");
    st.sweep(&mut sessions);
    if sessions.len() >= st.config.max_sessions {
        return Err(ApiError::new(StatusCode::TOO_MANY_REQUESTS, "too_many_sessions", "session limit reached"));
    }
    sessions.insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<TreeView>> {
    let s = st.session(&id)?;
    let view = lock(&s).view();
    Ok(Json(view))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct SuggestBody {
    pub count: Option<usize>,
    pub goal: Option<usize>,
    pub temperature: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestionView {
    pub text: String,
    pub logprob: f64,
    /// The text names a known theorem with a well-formed substitution.
    pub parses: bool,
    /// Applying it to the goal passes the kernel.
    pub valid: bool,
    pub error: Option<String>,
    pub error_kind: Option<String>,
    /// Subgoals the tactic would leave.
    pub children: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub version: u32,
    pub goal: usize,
    pub goal_text: String,
    pub suggestions: Vec<SuggestionView>,
}

async fn suggest(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<SuggestBody>>,
) -> ApiResult<Json<SuggestResponse>> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let s = st.session(&id)?;
    let (g, goal, text, root, ceiling) = {
        let s = lock(&s);
        let g = s.open_goal(body.goal)?;
        let (goal, text) = s.goal(g)?;
        let (_, root) = s.goal(0)?;
        (g, goal.clone(), text.to_string(), root.to_string(), s.ceiling)
    };
    let count = body.count.unwrap_or(8).clamp(1, 64);
    let temperature = body.temperature.unwrap_or(1.0);
    let seed = body.seed.unwrap_or(0);
    let st2 = st.clone();
    let (goal_c, text_c) = (goal.clone(), text.clone());
    let out = tokio::task::spawn_blocking(move || {
        let req = SuggestRequest {
            root: &root,
            goal: &goal_c,
            goal_text: &text_c,
            count,
            temperature,
            ceiling,
            attempt_seed: seed,
        };
        st2.suggester.suggest(&req, &mut ChaCha8Rng::seed_from_u64(seed))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
    .map_err(|e: PolicyError| ApiError::new(StatusCode::BAD_GATEWAY, "policy_unavailable", e.to_string()))?;
    let db = st.db;
    let suggestions = out
        .into_iter()
        .take(count)
        .map(|ScoredTactic { text: t, logprob }| {
            let mut v = SuggestionView {
                text: t.clone(),
                logprob,
                parses: false,
                valid: false,
                error: None,
                error_kind: None,
                children: Vec::new(),
            };
            let checked = parse_tactic(db, &t, ceiling).map(|tac| {
                v.parses = true;
                apply_tactic(db, &goal, &tac)
            });
            match checked.and_then(|r| r) {
                Ok(children) => {
                    v.valid = true;
                    v.children = children.iter().map(|c| db.render_expr(c)).collect();
                }
                Err(e) => {
                    v.error_kind = Some(e.kind().to_string());
                    v.error = Some(e.to_string());
                }
            }
            v
        })
        .collect();
    Ok(Json(SuggestResponse {
        version: SCHEMA_VERSION,
        goal: g,
        goal_text: text,
        suggestions,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ApplyBody {
    pub tactic_text: String,
    pub goal: Option<usize>,
}

async fn apply(State(st): State<Arc<AppState>>, Path(id): Path<String>, Json(body): Json<ApplyBody>) -> ApiResult<Json<TreeView>> {
    let s = st.session(&id)?;
    let mut s = lock(&s);
    s.apply(st.db, body.goal, &body.tactic_text)?;
    Ok(Json(s.view()))
}

async fn undo(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<TreeView>> {
    let s = st.session(&id)?;
    let mut s = lock(&s);
    s.undo()?;
    Ok(Json(s.view()))
}

async fn redo(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<TreeView>> {
    let s = st.session(&id)?;
    let mut s = lock(&s);
    s.redo(st.db)?;
    Ok(Json(s.view()))
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
    pub label: Option<String>,
}

async fn export(State(st): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let format: ExportFormat = q.format.as_deref().unwrap_or("mm").parse().map_err(ApiError::bad_request)?;
    let s = st.session(&id)?;
    let text = lock(&s).export(st.db, format, q.label.as_deref())?;
    let mime = match format {
        ExportFormat::Mm => "text/plain; charset=utf-8",
        ExportFormat::Jsonl => "application/x-ndjson",
    };
    Ok(([(header::CONTENT_TYPE, mime)], text).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct SearchBody {
    pub goal: Option<usize>,
    pub attempts: Option<usize>,
    pub samples: Option<usize>,
    pub max_expansions: Option<usize>,
    pub seed: Option<u64>,
    pub priority: Option<PriorityMode>,
}

/// Fails every request once the job is cancelled, which drains the search.
struct Cancellable {
    inner: Arc<dyn Suggester>,
    job: Arc<Job>,
}

impl Suggester for Cancellable {
    fn suggest(&self, req: &SuggestRequest<'_>, rng: &mut dyn rand::RngCore) -> Result<Vec<ScoredTactic>, PolicyError> {
        if self.job.cancel.load(Ordering::Relaxed) {
            return Err(PolicyError::Transport("cancelled".into()));
        }
        self.inner.suggest(req, rng)
    }
}

async fn start_search(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<SearchBody>>,
) -> ApiResult<(StatusCode, Json<JobView>)> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let s = st.session(&id)?;
    let (g, goal, ceiling) = {
        let s = lock(&s);
        let g = s.open_goal(body.goal)?;
        (g, s.goal(g)?.0.clone(), s.ceiling)
    };
    let params = SearchParams {
        attempts: body.attempts.unwrap_or(1),
        samples: body.samples.unwrap_or(16),
        max_expansions: body.max_expansions.unwrap_or(128).min(st.config.max_job_expansions),
        seed: body.seed.unwrap_or(0),
        priority: body.priority.unwrap_or(PriorityMode::Logprob),
        ..SearchParams::default()
    };
    params.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    if params.priority == PriorityMode::Value && st.scorer.is_none() {
        return Err(ApiError::bad_request("the configured policy cannot score goals"));
    }
    let job_id = st.fresh_id("j");
    let job = Arc::new(Job {
        cancel: AtomicBool::new(false),
        view: Mutex::new(JobView {
            version: SCHEMA_VERSION,
            id: job_id.clone(),
            session: id.clone(),
            goal: g,
            status: JobStatus::Running,
            result: None,
            error: None,
        }),
    });
    {
        let mut jobs = st.jobs.lock().expect("job map lock");
        let running = jobs
            .values()
            .filter(|j| j.view.lock().expect("job lock").status == JobStatus::Running)
            .count();
        if running >= st.config.max_jobs {
            return Err(ApiError::new(StatusCode::TOO_MANY_REQUESTS, "too_many_jobs", "job limit reached"));
        }
        jobs.insert(job_id, job.clone());
    }
    let view = job.view.lock().expect("job lock").clone();
    let st2 = st.clone();
    tokio::task::spawn_blocking(move || {
        let db = st2.db;
        let mut problem = Problem::from_goal(&format!("{id}-goal{g}"), goal);
        problem.ceiling = ceiling;
        let suggester = Cancellable {
            inner: st2.suggester.clone(),
            job: job.clone(),
        };
        let outcome = run_attempts(db, &problem, &suggester, st2.scorer.as_deref(), &params);
        let mut v = job.view.lock().expect("job lock");
        match outcome {
            _ if job.cancel.load(Ordering::Relaxed) => v.status = JobStatus::Cancelled,
            Ok(a) => {
                let best = a.best();
                let steps = best
                    .proof
                    .as_ref()
                    .map(|t| {
                        tree_records(db, &problem.label, &problem.goal.hyps, t)
                            .into_iter()
                            .map(|r: ProofStepRecord| StepView {
                                goal: r.goal,
                                tactic: r.proof_step,
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                v.result = Some(JobResult {
                    proved: best.proved,
                    expansions: a.runs.iter().map(|r| r.expansions).sum(),
                    steps,
                });
                v.status = JobStatus::Done;
            }
            Err(e) => {
                v.error = Some(e.to_string());
                v.status = JobStatus::Failed;
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(view)))
}

fn job(st: &AppState, id: &str) -> ApiResult<Arc<Job>> {
    st.jobs
        .lock()
        .expect("job map lock")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("job", id))
}

async fn get_job(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<JobView>> {
    let j = job(&st, &id)?;
    let v = j.view.lock().expect("job lock").clone();
    Ok(Json(v))
}

async fn cancel_job(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<JobView>> {
    let j = job(&st, &id)?;
    j.cancel.store(true, Ordering::Relaxed);
    let v = j.view.lock().expect("job lock").clone();
    Ok(Json(v))
}

#[derive(Debug, Deserialize)]
pub struct TheoremQuery {
    pub query: Option<String>,
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremView {
    pub label: String,
    pub statement: String,
    pub axiom: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremList {
    pub version: u32,
    pub theorems: Vec<TheoremView>,
}

/// Logical assertions whose label or statement text contains the query.
async fn theorems(State(st): State<Arc<AppState>>, Query(q): Query<TheoremQuery>) -> Json<TheoremList> {
    let db = st.db;
    let query = q.query.unwrap_or_default();
    let needle = query.trim();
    let limit = q.limit.unwrap_or(50).min(1000);
    let theorems = db
        .assertions()
        .iter()
        .filter(|a| db.is_logical(a))
        .map(|a| (a, db.statement_text(a)))
        .filter(|(a, text)| needle.is_empty() || a.label.contains(needle) || text.contains(needle))
        .take(limit)
        .map(|(a, statement)| TheoremView {
            label: a.label.clone(),
            statement,
            axiom: a.kind == mmprove_core::AssertionKind::Axiom,
        })
        .collect();
    Json(TheoremList {
        version: SCHEMA_VERSION,
        theorems,
    })
}

/// Serves `router` on `listener` until ctrl-c.
pub async fn serve(router: Router, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

struct StubLm {
    oracle: ReplayOracle,
    outcomes: PerfectOutcomeOracle,
}

/// A completion endpoint that answers `/generate` with the recorded step of
/// known goals and `/score` with P for goals on recorded proofs.
pub fn stub_lm_router(records: &[ProofStepRecord]) -> Router {
    let stub = Arc::new(StubLm {
        oracle: ReplayOracle::new(records),
        outcomes: PerfectOutcomeOracle::new(records),
    });
    Router::new()
        .route("/generate", post(stub_generate))
        .route("/score", post(stub_score))
        .with_state(stub)
}

fn prompt_goal<'a>(prompt: &'a str, tag: &str) -> &'a str {
    prompt.trim().trim_start_matches("GOAL ").trim_end_matches(tag).trim()
}

async fn stub_generate(State(stub): State<Arc<StubLm>>, Json(req): Json<CompletionRequest>) -> Json<CompletionResponse> {
    let goal = prompt_goal(&req.prompt, "PROOFSTEP");
    let eot = req.stop.first().map(String::as_str).unwrap_or(DEFAULT_EOT);
    let choices = stub
        .oracle
        .step(goal)
        .map(|s| Choice {
            text: format!("{s}{eot}"),
            total_logprob: -0.1,
        })
        .into_iter()
        .take(req.n.max(1))
        .collect();
    Json(CompletionResponse { choices })
}

async fn stub_score(State(stub): State<Arc<StubLm>>, Json(req): Json<CompletionRequest>) -> Json<ScoreResponse> {
    let p = stub.outcomes.score(prompt_goal(&req.prompt, "OUTCOME")).unwrap_or(0.0);
    let next_token_probs = [("P".to_string(), p), ("N".to_string(), 1.0 - p)].into_iter().collect();
    Json(ScoreResponse { next_token_probs })
}
