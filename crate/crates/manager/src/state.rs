//! Orchestration state and the events that change it. `apply` is the only
//! mutator, so replaying a journal rebuilds the exact same state.

use std::collections::BTreeMap;

use mask_core::pipeline::MaskingConfig;
use mask_core::VideoHeader;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Merging,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }

    /// Whether chunks of a job in this state may be handed out.
    pub fn accepts_work(self) -> bool {
        matches!(self, JobState::Queued | JobState::Running)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkState {
    Pending,
    Assigned,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerState {
    Idle,
    Busy,
    Lost,
}

/// Files produced by a finished job, as paths inside the data directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOutput {
    pub video: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinematics_json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinematics_csv: Option<String>,
    #[serde(default)]
    pub skipped_overlays: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub video: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<String>,
    pub config: MaskingConfig,
    pub header: VideoHeader,
    pub state: JobState,
    pub chunks: Vec<String>,
    pub max_attempts: u32,
    pub created_ms: u64,
    pub updated_ms: u64,
    pub progress: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<JobOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub job_id: String,
    pub core: [u64; 2],
    pub input: [u64; 2],
    pub state: ChunkState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<String>,
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

impl Chunk {
    pub fn core_len(&self) -> u64 {
        self.core[1] - self.core[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub id: String,
    pub capabilities: Vec<String>,
    pub registered_ms: u64,
    pub last_heartbeat_ms: u64,
    pub state: WorkerState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    JobSubmitted { job: Job, chunks: Vec<Chunk> },
    WorkerRegistered { worker: WorkerRecord },
    Heartbeat { worker_id: String, at: u64 },
    ChunkClaimed { chunk_id: String, worker_id: String, at: u64 },
    ChunkCompleted { chunk_id: String, worker_id: String, result: String, at: u64 },
    ChunkFailed { chunk_id: String, error: String, at: u64 },
    WorkerLost { worker_id: String, at: u64 },
    MergeStarted { job_id: String, at: u64 },
    JobDone { job_id: String, output: JobOutput, at: u64 },
    JobFailed { job_id: String, reason: String, at: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManagerState {
    pub jobs: BTreeMap<String, Job>,
    pub chunks: BTreeMap<String, Chunk>,
    pub workers: BTreeMap<String, WorkerRecord>,
    /// Job ids in submission order.
    pub job_order: Vec<String>,
    pub jobs_submitted: u64,
    pub workers_registered: u64,
}

impl ManagerState {
    pub fn next_job_id(&self) -> String {
        format!("job-{:06}", self.jobs_submitted + 1)
    }

    pub fn next_worker_id(&self) -> String {
        format!("w-{:06}", self.workers_registered + 1)
    }

    /// Chunk currently assigned to `worker_id`, if any.
    pub fn assigned_to(&self, worker_id: &str) -> Option<&Chunk> {
        self.chunks
            .values()
            .find(|c| c.state == ChunkState::Assigned && c.worker.as_deref() == Some(worker_id))
    }

    /// Oldest pending chunk, of the oldest job accepting work, whose job
    /// needs only capabilities in `caps`.
    pub fn next_claimable(&self, caps: &[String]) -> Option<&Chunk> {
        self.job_order
            .iter()
            .filter_map(|id| self.jobs.get(id))
            .filter(|j| j.state.accepts_work())
            .filter(|j| j.config.required_capabilities().iter().all(|c| caps.contains(c)))
            .flat_map(|j| j.chunks.iter().filter_map(|c| self.chunks.get(c)))
            .find(|c| c.state == ChunkState::Pending)
    }

    fn progress_of(&self, job: &Job) -> f64 {
        let total = job.header.frame_count as f64;
        if total == 0.0 {
            return 1.0;
        }
        let done: u64 = job
            .chunks
            .iter()
            .filter_map(|c| self.chunks.get(c))
            .filter(|c| c.state == ChunkState::Done)
            .map(Chunk::core_len)
            .sum();
        done as f64 / total
    }

    pub fn all_chunks_done(&self, job_id: &str) -> bool {
        self.jobs.get(job_id).is_some_and(|j| {
            j.chunks
                .iter()
                .all(|c| self.chunks.get(c).is_some_and(|c| c.state == ChunkState::Done))
        })
    }

    fn release_worker(&mut self, worker_id: Option<&str>) {
        if let Some(w) = worker_id.and_then(|id| self.workers.get_mut(id)) {
            if w.state == WorkerState::Busy {
                w.state = WorkerState::Idle;
            }
        }
    }

    fn fail_job(&mut self, job_id: &str, reason: String, at: u64) {
        if let Some(job) = self.jobs.get_mut(job_id) {
            if !job.state.is_terminal() {
                job.state = JobState::Failed;
                job.error = Some(reason);
                job.updated_ms = at;
            }
        }
    }

    /// Returns an assigned chunk to the queue with one more attempt, or
    /// fails it (and its job) once the attempt budget is spent.
    fn requeue(&mut self, chunk_id: &str, error: String, at: u64) {
        let Some(chunk) = self.chunks.get_mut(chunk_id) else { return };
        if matches!(chunk.state, ChunkState::Done | ChunkState::Failed) {
            return;
        }
        let worker = chunk.worker.take();
        let job_id = chunk.job_id.clone();
        let max = self.jobs.get(&job_id).map_or(1, |j| j.max_attempts);
        chunk.last_error = Some(error.clone());
        let exhausted = chunk.attempt >= max;
        if exhausted {
            chunk.state = ChunkState::Failed;
        } else {
            chunk.state = ChunkState::Pending;
            chunk.attempt += 1;
        }
        let attempts = chunk.attempt;
        self.release_worker(worker.as_deref());
        if exhausted {
            self.fail_job(&job_id, format!("chunk {chunk_id} failed after {attempts} attempts: {error}"), at);
        } else if let Some(job) = self.jobs.get_mut(&job_id) {
            job.updated_ms = at;
        }
    }

    pub fn apply(&mut self, event: &Event) {
        match event {
            Event::JobSubmitted { job, chunks } => {
                self.jobs_submitted += 1;
                self.job_order.push(job.id.clone());
                for c in chunks {
                    self.chunks.insert(c.id.clone(), c.clone());
                }
                self.jobs.insert(job.id.clone(), job.clone());
            }
            Event::WorkerRegistered { worker } => {
                self.workers_registered += 1;
                self.workers.insert(worker.id.clone(), worker.clone());
            }
            Event::Heartbeat { worker_id, at } => {
                let busy = self.assigned_to(worker_id).is_some();
                if let Some(w) = self.workers.get_mut(worker_id) {
                    w.last_heartbeat_ms = w.last_heartbeat_ms.max(*at);
                    if w.state == WorkerState::Lost {
                        w.state = if busy { WorkerState::Busy } else { WorkerState::Idle };
                    }
                }
            }
            Event::ChunkClaimed { chunk_id, worker_id, at } => {
                let Some(chunk) = self.chunks.get_mut(chunk_id) else { return };
                chunk.state = ChunkState::Assigned;
                chunk.worker = Some(worker_id.clone());
                let job_id = chunk.job_id.clone();
                if let Some(w) = self.workers.get_mut(worker_id) {
                    w.state = WorkerState::Busy;
                    w.last_heartbeat_ms = w.last_heartbeat_ms.max(*at);
                }
                if let Some(job) = self.jobs.get_mut(&job_id) {
                    if job.state == JobState::Queued {
                        job.state = JobState::Running;
                    }
                    job.updated_ms = *at;
                }
            }
            Event::ChunkCompleted {
                chunk_id,
                worker_id,
                result,
                at,
            } => {
                let Some(chunk) = self.chunks.get_mut(chunk_id) else { return };
                chunk.state = ChunkState::Done;
                chunk.result = Some(result.clone());
                chunk.worker = Some(worker_id.clone());
                let job_id = chunk.job_id.clone();
                self.release_worker(Some(worker_id));
                if let Some(job) = self.jobs.get(&job_id) {
                    let progress = self.progress_of(job);
                    let job = self.jobs.get_mut(&job_id).expect("present");
                    job.progress = job.progress.max(progress);
                    job.updated_ms = *at;
                }
            }
            Event::ChunkFailed { chunk_id, error, at } => self.requeue(chunk_id, error.clone(), *at),
            Event::WorkerLost { worker_id, at } => {
                if let Some(w) = self.workers.get_mut(worker_id) {
                    w.state = WorkerState::Lost;
                }
                let held: Vec<String> = self
                    .chunks
                    .values()
                    .filter(|c| c.state == ChunkState::Assigned && c.worker.as_deref() == Some(worker_id))
                    .map(|c| c.id.clone())
                    .collect();
                for c in held {
                    self.requeue(&c, format!("worker {worker_id} lost"), *at);
                }
                // requeue may have marked it idle; it stays lost until it heartbeats
                if let Some(w) = self.workers.get_mut(worker_id) {
                    w.state = WorkerState::Lost;
                }
            }
            Event::MergeStarted { job_id, at } => {
                if let Some(job) = self.jobs.get_mut(job_id) {
                    if job.state.accepts_work() {
                        job.state = JobState::Merging;
                        job.updated_ms = *at;
                    }
                }
            }
            Event::JobDone { job_id, output, at } => {
                if let Some(job) = self.jobs.get_mut(job_id) {
                    if job.state == JobState::Merging {
                        job.state = JobState::Done;
                        job.progress = 1.0;
                        job.output = Some(output.clone());
                        job.updated_ms = *at;
                    }
                }
            }
            Event::JobFailed { job_id, reason, at } => self.fail_job(job_id, reason.clone(), *at),
        }
    }
}
