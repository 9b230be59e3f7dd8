//! JSON-over-HTTP service for the interaction loop.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dakg_core::store::save_ntriples;
use dakg_core::vocab::{class, RDF_TYPE};
use dakg_core::{
    annotate, profile_reader, DatasetProfile, Graph, Ladder, LadderError, LadderFilters, ProfileOptions, Schema, Target,
    TaskContext, Term,
};
use dakg_kge::{
    checkpoint, evaluate, fine_tune, train_data, EarlyStopConfig, EmbeddingState, EvalContext, EvalMode, EvalReport,
    FineTuneConfig, KgData, ModelConfig, NamedTriple, Sides, SplitSpec, TrainHistory,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::mpsc;

use crate::anticipate::{recommend, AnticipateError, AnticipateOptions, Method, Recommendation, Sources};
use crate::interaction::{
    annotate_interaction, check_submission, ensure_user, next_task_id, stub_execute, Feedback,
    InteractionError, InteractionRecord, ModelEvaluation, Submission,
};

/// Port used when `DAKG_PORT` is unset.
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// N-Triples store loaded at start and written back on shutdown.
    pub store: Option<PathBuf>,
    /// Embedding checkpoint loaded at start and replaced after training.
    pub checkpoint: Option<PathBuf>,
    pub anticipate: AnticipateOptions,
    pub split: SplitSpec,
    pub early_stop: EarlyStopConfig,
    /// Seed for the stub workflow executor.
    pub seed: u64,
    /// Feedback fine-tunes waiting at most; further ones are dropped.
    pub fine_tune_queue: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainJob {
    pub id: usize,
    pub state: JobState,
    pub config: ModelConfig,
    pub history: Option<TrainHistory>,
    pub error: Option<String>,
}

pub struct AppState {
    pub schema: Schema,
    pub ladder: Ladder,
    pub config: ServiceConfig,
    pub graph: RwLock<Graph>,
    pub embeddings: RwLock<Option<Arc<EmbeddingState>>>,
    pub datasets: RwLock<BTreeMap<String, DatasetProfile>>,
    pub tasks: RwLock<BTreeMap<String, InteractionRecord>>,
    pub jobs: Mutex<Vec<TrainJob>>,
    pub report: RwLock<Option<Vec<EvalReport>>>,
    fine_tunes: Option<mpsc::Sender<Vec<NamedTriple>>>,
}

impl AppState {
    pub fn new(schema: Schema, graph: Graph, embeddings: Option<EmbeddingState>, config: ServiceConfig) -> Self {
        let mut datasets = BTreeMap::new();
        for d in graph.instances_of(&Term::Iri(class::DATASET.into())) {
            if let Some(p) = DatasetProfile::from_graph(&graph, &d) {
                datasets.insert(d.lexical().to_string(), p);
            }
        }
        AppState {
            schema,
            ladder: Ladder::default(),
            config,
            graph: RwLock::new(graph),
            embeddings: RwLock::new(embeddings.map(Arc::new)),
            datasets: RwLock::new(datasets),
            tasks: RwLock::new(BTreeMap::new()),
            jobs: Mutex::new(Vec::new()),
            report: RwLock::new(None),
            fine_tunes: None,
        }
    }

    pub fn embeddings(&self) -> Option<Arc<EmbeddingState>> {
        self.embeddings.read().expect("lock").clone()
    }

    /// Starts the background worker that folds feedback into the embeddings.
    /// Needs a running Tokio runtime.
    pub fn with_fine_tuning(mut self) -> Arc<Self> {
        let (tx, rx) = mpsc::channel(self.config.fine_tune_queue.unwrap_or(8).max(1));
        self.fine_tunes = Some(tx);
        let app = Arc::new(self);
        tokio::spawn(fine_tune_worker(app.clone(), rx));
        app
    }
}

async fn fine_tune_worker(app: Arc<AppState>, mut rx: mpsc::Receiver<Vec<NamedTriple>>) {
    while let Some(new) = rx.recv().await {
        let Some(state) = app.embeddings() else { continue };
        let ft: FineTuneConfig = app.config.anticipate.fine_tune_config.clone();
        let done = tokio::task::spawn_blocking(move || fine_tune(&state, &new, &ft, &BTreeMap::new())).await;
        match done {
            Ok(Ok(s)) => *app.embeddings.write().expect("lock") = Some(Arc::new(s)),
            Ok(Err(e)) => tracing::warn!("feedback fine-tune failed: {e}"),
            Err(e) => tracing::warn!("feedback fine-tune panicked: {e}"),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<InteractionError> for ApiError {
    fn from(e: InteractionError) -> Self {
        let status = match e {
            InteractionError::Contradiction(_) => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<AnticipateError> for ApiError {
    fn from(e: AnticipateError) -> Self {
        let status = match &e {
            AnticipateError::Ladder(LadderError::NoData) | AnticipateError::Unavailable(_) | AnticipateError::NoEmbeddings => {
                StatusCode::NOT_FOUND
            }
            AnticipateError::Ladder(LadderError::UnknownUser(_)) => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets).post(upload_dataset))
        .route("/recommend", post(recommend_handler))
        .route("/tasks", post(submit_task))
        .route("/feedback", post(feedback))
        .route("/train", post(start_training))
        .route("/train/{id}", get(training_status))
        .route("/eval/report", get(eval_report))
        .route("/kg/stats", get(kg_stats))
        .with_state(app)
}

async fn list_datasets(State(app): State<Arc<AppState>>) -> Json<Vec<Value>> {
    let d = app.datasets.read().expect("lock");
    Json(d.iter().map(|(iri, p)| json!({ "dataset": iri, "profile": p })).collect())
}

#[derive(Deserialize)]
struct UploadParams {
    name: String,
    target: String,
    #[serde(default)]
    delimiter: Option<char>,
}

async fn upload_dataset(State(app): State<Arc<AppState>>, Query(q): Query<UploadParams>, body: String) -> ApiResult<Value> {
    let mut opts = ProfileOptions::default();
    if let Some(c) = q.delimiter {
        opts.delimiter = u8::try_from(c).map_err(|_| ApiError::bad("delimiter must be a single-byte character"))?;
    }
    let profile = profile_reader(&q.name, body.as_bytes(), &q.target, &opts).map_err(|e| ApiError::bad(e.to_string()))?;
    let entity = {
        let mut g = app.graph.write().expect("lock");
        annotate(&mut g, &app.schema, &profile).map_err(|e| ApiError::bad(e.to_string()))?
    };
    app.datasets.write().expect("lock").insert(entity.lexical().to_string(), profile.clone());
    Ok(Json(json!({ "dataset": entity.lexical(), "profile": profile })))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ContextBody {
    dataset: Option<String>,
    intent: Option<String>,
    metric: Option<String>,
    constraints: Vec<String>,
    filters: LadderFilters,
}

#[derive(Debug, Deserialize)]
struct RecommendBody {
    user: String,
    #[serde(default)]
    context: ContextBody,
    target: Target,
    #[serde(default = "auto")]
    method: Method,
    #[serde(default = "three")]
    k: usize,
}

fn auto() -> Method {
    Method::Auto
}

fn three() -> usize {
    3
}

fn term(s: &str) -> Result<Term, ApiError> {
    Term::iri(s).map_err(|e| ApiError::bad(e.to_string()))
}

async fn recommend_handler(State(app): State<Arc<AppState>>, Json(body): Json<RecommendBody>) -> ApiResult<Recommendation> {
    if body.k == 0 {
        return Err(ApiError::bad("k must be positive"));
    }
    let c = body.context;
    let mut ctx = TaskContext::new(term(&body.user)?);
    ctx.dataset = c.dataset.as_deref().map(term).transpose()?;
    ctx.intent = c.intent.as_deref().map(term).transpose()?;
    ctx.metric = c.metric.as_deref().map(term).transpose()?;
    ctx.constraints = c.constraints.iter().map(|s| term(s)).collect::<Result<_, _>>()?;
    ctx.filters = c.filters;
    {
        let mut g = app.graph.write().expect("lock");
        ensure_user(&mut g, &body.user)?;
        if let Some(d) = &ctx.dataset {
            if !g.is_instance_of(d, &Term::Iri(class::DATASET.into())) {
                return Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown dataset {}", d.lexical())));
            }
        }
    }
    let app2 = app.clone();
    let rec = tokio::task::spawn_blocking(move || {
        let g = app2.graph.read().expect("lock");
        let state = app2.embeddings();
        let src = Sources {
            schema: &app2.schema,
            graph: &g,
            ladder: &app2.ladder,
            state: state.as_deref(),
            options: &app2.config.anticipate,
        };
        recommend(&src, &ctx, body.target, body.method, body.k)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(rec))
}

#[derive(Serialize)]
struct SubmitResponse {
    task_id: String,
    workflow: Vec<String>,
    evaluation: ModelEvaluation,
}

async fn submit_task(State(app): State<Arc<AppState>>, Json(sub): Json<Submission>) -> ApiResult<SubmitResponse> {
    let rec = {
        let mut g = app.graph.write().expect("lock");
        let mut scratch = g.clone();
        ensure_user(&mut scratch, &sub.user)?;
        check_submission(&scratch, &sub)?;
        let (workflow, evaluation) = stub_execute(&app.schema, &sub, app.config.seed)?;
        let rec = InteractionRecord { task: next_task_id(&scratch), submission: sub, workflow, evaluation, feedback: None };
        annotate_interaction(&app.schema, &mut scratch, &rec)?;
        *g = scratch;
        rec
    };
    app.tasks.write().expect("lock").insert(rec.task.clone(), rec.clone());
    Ok(Json(SubmitResponse { task_id: rec.task, workflow: rec.workflow, evaluation: rec.evaluation }))
}

#[derive(Deserialize)]
struct FeedbackBody {
    task_id: String,
    score: u8,
    #[serde(default)]
    tags: Vec<String>,
}

async fn feedback(State(app): State<Arc<AppState>>, Json(body): Json<FeedbackBody>) -> ApiResult<Value> {
    let mut rec = app
        .tasks
        .read()
        .expect("lock")
        .get(&body.task_id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown task {}", body.task_id)))?;
    if rec.feedback.is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("task {} already has feedback", body.task_id)));
    }
    rec.feedback = Some(Feedback { score: body.score, tags: body.tags });
    let triples = {
        let mut g = app.graph.write().expect("lock");
        annotate_interaction(&app.schema, &mut g, &rec)?
    };
    app.tasks.write().expect("lock").insert(rec.task.clone(), rec.clone());

    let mut queued = false;
    if let (Some(tx), Some(state)) = (&app.fine_tunes, app.embeddings()) {
        let g = app.graph.read().expect("lock");
        let mut named: Vec<NamedTriple> = triples.iter().map(|t| state.view.map_triple(t)).collect();
        named.extend(state.view.shortcut_triples(&Graph::from_triples(triples.iter().cloned()).unwrap_or_default()));
        // The store may hold the dataset or user without embeddings yet.
        for e in [&rec.submission.dataset, &rec.submission.user] {
            if state.entities.get(e).is_none() {
                named.extend(g.find(Some(&Term::Iri(e.clone())), None, None).iter().map(|t| state.view.map_triple(t)));
            }
        }
        queued = tx.try_send(named).is_ok();
    }
    Ok(Json(json!({ "task_id": rec.task, "triples": triples.len(), "fine_tune_queued": queued })))
}

async fn start_training(State(app): State<Arc<AppState>>, Json(cfg): Json<ModelConfig>) -> ApiResult<Value> {
    cfg.validate().map_err(ApiError::bad)?;
    let id = {
        let mut jobs = app.jobs.lock().expect("lock");
        if jobs.iter().any(|j| j.state == JobState::Running) {
            return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "a training job is already running"));
        }
        let id = jobs.len();
        jobs.push(TrainJob { id, state: JobState::Running, config: cfg.clone(), history: None, error: None });
        id
    };
    let app2 = app.clone();
    tokio::task::spawn_blocking(move || {
        let g = app2.graph.read().expect("lock").clone();
        let data = KgData::build(&g, &app2.schema, &app2.config.split);
        let outcome = train_data(&data, &cfg, &app2.config.early_stop);
        let mut jobs = app2.jobs.lock().expect("lock");
        let job = &mut jobs[id];
        match outcome {
            Ok((state, history)) => {
                let ctx = EvalContext { candidates: Some(&data.candidates), known: None };
                let reports = [EvalMode::Raw, EvalMode::RangeFiltered]
                    .into_iter()
                    .map(|m| evaluate(&state, &data.test, m, Sides::Both, &ctx))
                    .collect();
                *app2.report.write().expect("lock") = Some(reports);
                if let Some(p) = &app2.config.checkpoint {
                    if let Err(e) = checkpoint::save(&state, p) {
                        tracing::warn!("could not write checkpoint {}: {e}", p.display());
                    }
                }
                *app2.embeddings.write().expect("lock") = Some(Arc::new(state));
                job.state = JobState::Done;
                job.history = Some(history);
            }
            Err(e) => {
                job.state = JobState::Failed;
                job.error = Some(e.to_string());
            }
        }
    });
    Ok(Json(json!({ "job_id": id })))
}

async fn training_status(State(app): State<Arc<AppState>>, Path(id): Path<usize>) -> ApiResult<TrainJob> {
    let jobs = app.jobs.lock().expect("lock");
    jobs.get(id).cloned().map(Json).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown job {id}")))
}

async fn eval_report(State(app): State<Arc<AppState>>) -> ApiResult<Vec<EvalReport>> {
    app.report
        .read()
        .expect("lock")
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no model has been trained in this session"))
}

async fn kg_stats(State(app): State<Arc<AppState>>) -> Json<Value> {
    let g = app.graph.read().expect("lock");
    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    for t in g.find(None, Some(&Term::Iri(RDF_TYPE.into())), None) {
        *per_class.entry(t.object.lexical().to_string()).or_default() += 1;
    }
    Json(json!({
        "triples": g.len(),
        "entities": g.entities().len(),
        "relations": g.relations().len(),
        "per_class": per_class,
        "embeddings": app.embeddings().map(|s| s.entities.len()),
    }))
}

/// Serves until Ctrl-C, then writes the store back when a path is configured.
pub async fn serve(app: Arc<AppState>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(p) = &app.config.store {
        let g = app.graph.read().expect("lock");
        save_ntriples(&g, p).map_err(|e| std::io::Error::other(e.to_string()))?;
        tracing::info!("store written to {}", p.display());
    }
    Ok(())
}

/// Port from `DAKG_PORT`, else [`DEFAULT_PORT`].
pub fn port_from_env() -> Result<u16, String> {
    match std::env::var("DAKG_PORT") {
        Ok(v) => v.parse().map_err(|_| format!("DAKG_PORT is not a port number: {v:?}")),
        Err(_) => Ok(DEFAULT_PORT),
    }
}
