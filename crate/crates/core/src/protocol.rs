//! Messages exchanged between the manager and its workers over HTTP.
//!
//! Media inputs travel by path into storage both sides can read. Chunk
//! results travel inline as base64-encoded RVF.

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::pipeline::{KinematicsFrame, MaskingConfig, SkipRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub capabilities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub worker_id: String,
    /// Seconds between claim attempts when idle.
    pub poll_interval: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeartbeatResponse {
    pub worker_id: String,
    pub state: String,
}

/// A unit of work: process `input`, keep `core`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkAssignment {
    pub chunk_id: String,
    pub job_id: String,
    pub attempt: u32,
    pub core: [u64; 2],
    pub input: [u64; 2],
    pub total_frames: u64,
    pub video: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<String>,
    pub config: MaskingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimResponse {
    pub chunk: Option<ChunkAssignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChunkOutcome {
    Completed {
        /// Core-range frames as an RVF stream, base64 encoded.
        frames_rvf: String,
        #[serde(default)]
        kinematics: Vec<KinematicsFrame>,
        #[serde(default)]
        skips: Vec<SkipRecord>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkReport {
    pub worker_id: String,
    pub attempt: u32,
    pub outcome: ChunkOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkReportResponse {
    /// False when the report was a duplicate and changed nothing.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

pub fn encode_payload(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn decode_payload(text: &str) -> Result<Vec<u8>, base64::DecodeError> {
    base64::engine::general_purpose::STANDARD.decode(text)
}
