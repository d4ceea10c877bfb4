//! HTTP+JSON surface of the manager.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::extract::{Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mask_core::pipeline::{config_schema, Preset};
use mask_core::protocol::{ApiError, ChunkReport, ChunkReportResponse, ClaimResponse, RegisterRequest};
use serde::Deserialize;
use tokio::net::TcpListener;
use tower::ServiceExt;
use tower_http::services::ServeFile;

use crate::service::{JobView, Manager, OutputPart, SubmitJobRequest};
use crate::ManagerError;

type Shared = Arc<Manager>;

struct HttpError(ManagerError);

impl From<ManagerError> for HttpError {
    fn from(e: ManagerError) -> Self {
        Self(e)
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let (status, path) = match &self.0 {
            ManagerError::Validation { path, .. } => (StatusCode::UNPROCESSABLE_ENTITY, Some(path.clone())),
            ManagerError::NotFound(_) => (StatusCode::NOT_FOUND, None),
            ManagerError::Forbidden(_) => (StatusCode::FORBIDDEN, None),
            ManagerError::Conflict(_) => (StatusCode::CONFLICT, None),
            ManagerError::Input(_) | ManagerError::Parameter(_) => (StatusCode::BAD_REQUEST, None),
            ManagerError::Storage(_) | ManagerError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        let body = ApiError {
            error: self.0.to_string(),
            path,
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, HttpError>;

/// Runs blocking manager work off the async executor.
async fn blocking<T, F>(m: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Manager) -> Result<T, ManagerError> + Send + 'static,
{
    let m = Arc::clone(m);
    tokio::task::spawn_blocking(move || f(&m))
        .await
        .map_err(|e| HttpError(ManagerError::Storage(format!("task panicked: {e}"))))?
        .map_err(HttpError)
}

fn spawn_merge(m: &Shared, job_id: String) {
    let m = Arc::clone(m);
    tokio::task::spawn_blocking(move || {
        if let Err(e) = m.merge_job(&job_id) {
            log::error!("merge of {job_id}: {e}");
        }
    });
}

async fn submit_job(State(m): State<Shared>, Json(req): Json<SubmitJobRequest>) -> ApiResult<(StatusCode, Json<JobView>)> {
    let view = blocking(&m, move |m| m.submit_job(req)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn list_jobs(State(m): State<Shared>) -> Json<Vec<JobView>> {
    Json(m.list_jobs())
}

async fn job_status(State(m): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<JobView>> {
    Ok(Json(m.job_status(&id)?))
}

async fn serve_file(path: std::path::PathBuf, req: Request) -> Response {
    match ServeFile::new(path).oneshot(req).await {
        Ok(res) => res.map(Body::new),
        Err(e) => HttpError(ManagerError::Storage(e.to_string())).into_response(),
    }
}

#[derive(Deserialize)]
struct OutputQuery {
    part: Option<String>,
}

async fn job_output(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<OutputQuery>,
    req: Request,
) -> ApiResult<Response> {
    let part = match q.part.as_deref().unwrap_or("video") {
        "video" => OutputPart::Video,
        "audio" => OutputPart::Audio,
        other => return Err(ManagerError::Parameter(format!("unknown output part {other:?}")).into()),
    };
    let path = m.output_path(&id, part)?;
    Ok(serve_file(path, req).await)
}

#[derive(Deserialize)]
struct KinematicsQuery {
    format: Option<String>,
}

async fn job_kinematics(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<KinematicsQuery>,
    req: Request,
) -> ApiResult<Response> {
    let part = match q.format.as_deref().unwrap_or("json") {
        "json" => OutputPart::KinematicsJson,
        "csv" => OutputPart::KinematicsCsv,
        other => return Err(ManagerError::Parameter(format!("unknown kinematics format {other:?}")).into()),
    };
    let path = m.output_path(&id, part)?;
    Ok(serve_file(path, req).await)
}

async fn preview(State(m): State<Shared>, Path(id): Path<String>, req: Request) -> ApiResult<Response> {
    let path = m.output_path(&id, OutputPart::Video)?;
    Ok(serve_file(path, req).await)
}

async fn register(State(m): State<Shared>, Json(req): Json<RegisterRequest>) -> ApiResult<impl IntoResponse> {
    let res = blocking(&m, move |m| m.register_worker(req.capabilities)).await?;
    Ok((StatusCode::CREATED, Json(res)))
}

async fn heartbeat(State(m): State<Shared>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&m, move |m| m.heartbeat(&id)).await?))
}

async fn claim(State(m): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<ClaimResponse>> {
    let chunk = blocking(&m, move |m| m.claim_chunk(&id)).await?;
    Ok(Json(ClaimResponse { chunk }))
}

async fn chunk_result(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Json(report): Json<ChunkReport>,
) -> ApiResult<Json<ChunkReportResponse>> {
    let outcome = blocking(&m, move |m| m.report_chunk(&id, report)).await?;
    if let Some(job) = outcome.merge {
        spawn_merge(&m, job);
    }
    Ok(Json(ChunkReportResponse {
        accepted: outcome.accepted,
    }))
}

async fn presets(State(m): State<Shared>) -> Json<Vec<Preset>> {
    Json(m.presets().list().to_vec())
}

async fn schema() -> Json<serde_json::Value> {
    Json(config_schema().clone())
}

pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/api/jobs", post(submit_job).get(list_jobs))
        .route("/api/jobs/{id}", get(job_status))
        .route("/api/jobs/{id}/output", get(job_output))
        .route("/api/jobs/{id}/kinematics", get(job_kinematics))
        .route("/api/workers/register", post(register))
        .route("/api/workers/{id}/heartbeat", post(heartbeat))
        .route("/api/workers/{id}/claim", post(claim))
        .route("/api/chunks/{id}/result", post(chunk_result))
        .route("/api/presets", get(presets))
        .route("/api/config-schema", get(schema))
        .route("/api/videos/{id}/preview", get(preview))
        .with_state(manager)
}

/// Serves the API until `shutdown` resolves. Interrupted merges are
/// resumed first, and a background task reaps silent workers.
pub async fn serve(
    manager: Shared,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    for job in manager.pending_merges() {
        spawn_merge(&manager, job);
    }
    let period = (manager.config().heartbeat_timeout / 4).clamp(Duration::from_millis(50), Duration::from_secs(5));
    let reaper = {
        let m = Arc::clone(&manager);
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let m = Arc::clone(&m);
                match tokio::task::spawn_blocking(move || m.reap_stale()).await {
                    Ok(Ok(requeued)) if !requeued.is_empty() => log::warn!("requeued chunks {requeued:?}"),
                    Ok(Err(e)) => log::error!("reaper: {e}"),
                    _ => {}
                }
            }
        })
    };
    let result = axum::serve(listener, router(manager)).with_graceful_shutdown(shutdown).await;
    reaper.abort();
    result
}

/// A server running on its own thread and runtime, for embedding the
/// manager in a blocking program. Dropping the handle shuts it down.
pub struct ServerHandle {
    addr: std::net::SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests, waits for in-flight ones and joins.
    pub fn stop(mut self) -> std::io::Result<()> {
        self.halt()
    }

    fn halt(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.halt();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn spawn_server(manager: Shared, addr: std::net::SocketAddr) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener = TcpListener::from_std(std_listener)?;
            serve(manager, listener, async {
                let _ = rx.await;
            })
            .await
        })
    });
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
