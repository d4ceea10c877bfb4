//! The manager side of the manager/worker architecture: accepts masking
//! jobs, splits them into frame-range chunks, hands chunks to polling
//! workers, recovers from lost workers and assembles the final outputs.
//!
//! State changes are events appended to a journal before they take effect,
//! so reopening the data directory restores the exact pre-crash state.

pub mod http;
pub mod plan;
pub mod service;
pub mod state;
pub mod store;

pub use plan::{plan_chunks, ChunkPlan};
pub use service::{
    Clock, JobView, ManualClock, Manager, ManagerConfig, OutputPart, ReportOutcome, SubmitJobRequest, SystemClock,
};
pub use state::{Chunk, ChunkState, Event, Job, JobOutput, JobState, ManagerState, WorkerRecord, WorkerState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManagerError {
    #[error("invalid config at {path}: {message}")]
    Validation { path: String, message: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("bad input: {0}")]
    Input(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
