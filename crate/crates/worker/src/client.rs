use std::time::Duration;

use mask_core::protocol::{
    ApiError, ChunkAssignment, ChunkReport, ChunkReportResponse, ClaimResponse, HeartbeatResponse, RegisterRequest,
    RegisterResponse,
};
use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("bad manager url {0:?}")]
    Url(String),
    #[error("manager unreachable: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("manager answered {status}: {message}")]
    Status { status: u16, message: String },
}

impl ClientError {
    /// Worth retrying with backoff: the manager is down, restarting or
    /// overloaded rather than rejecting the request itself.
    pub fn is_transient(&self) -> bool {
        match self {
            Self::Transport(_) => true,
            Self::Status { status, .. } => *status >= 500 || *status == 429,
            Self::Url(_) => false,
        }
    }
}

/// Thin blocking client for the manager's worker endpoints.
#[derive(Debug, Clone)]
pub struct ManagerClient {
    base: String,
    http: Client,
}

impl ManagerClient {
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let base = base.trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::Url(base));
        }
        let http = Client::builder()
            .connect_timeout(Duration::from_secs(5))
            .timeout(Duration::from_secs(120))
            .build()?;
        Ok(Self { base, http })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, ClientError> {
        let resp = req.send()?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json()?);
        }
        let body = resp.text().unwrap_or_default();
        let message = serde_json::from_str::<ApiError>(&body).map(|e| e.error).unwrap_or(body);
        Err(ClientError::Status {
            status: status.as_u16(),
            message,
        })
    }

    pub fn register(&self, capabilities: &[String]) -> Result<RegisterResponse, ClientError> {
        let body = RegisterRequest {
            capabilities: capabilities.to_vec(),
            name: None,
        };
        self.send(self.http.post(self.url("/api/workers/register")).json(&body))
    }

    pub fn heartbeat(&self, worker_id: &str) -> Result<HeartbeatResponse, ClientError> {
        self.send(self.http.post(self.url(&format!("/api/workers/{worker_id}/heartbeat"))))
    }

    pub fn claim(&self, worker_id: &str) -> Result<Option<ChunkAssignment>, ClientError> {
        let r: ClaimResponse = self.send(self.http.post(self.url(&format!("/api/workers/{worker_id}/claim"))))?;
        Ok(r.chunk)
    }

    pub fn report(&self, chunk_id: &str, report: &ChunkReport) -> Result<ChunkReportResponse, ClientError> {
        self.send(self.http.post(self.url(&format!("/api/chunks/{chunk_id}/result"))).json(report))
    }
}
