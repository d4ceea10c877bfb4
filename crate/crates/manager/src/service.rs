use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use mask_core::detection::parse_detections;
use mask_core::media::rvf::{read_rvf, read_rvf_file, read_rvf_header, write_rvf_file, RvfWriter};
use mask_core::media::transcode::Transcoder;
use mask_core::media::wav::{read_wav_file, write_wav_file};
use mask_core::media::{rvf, VideoHeader};
use mask_core::pipeline::{
    export_kinematics, KinematicsDocument, KinematicsFormat, KinematicsFrame, MaskingConfig, PipelineError,
    PresetStore, SkipRecord, VideoMeta,
};
use mask_core::protocol::{
    decode_payload, ChunkAssignment, ChunkOutcome, ChunkReport, HeartbeatResponse, RegisterResponse,
};
use mask_core::voice::{apply_voice_strategy, VoiceStrategy};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::plan::plan_chunks;
use crate::state::{Chunk, ChunkState, Event, Job, JobOutput, JobState, ManagerState, WorkerRecord, WorkerState};
use crate::store::Journal;
use crate::ManagerError;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }
}

/// Hand-driven clock for tests.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(ms: u64) -> Self {
        Self(AtomicU64::new(ms))
    }

    pub fn advance(&self, by: Duration) {
        self.0.fetch_add(by.as_millis() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone)]
pub struct ManagerConfig {
    pub data_dir: PathBuf,
    pub heartbeat_timeout: Duration,
    pub max_attempts: u32,
    /// Frames per chunk core.
    pub core_size: u64,
    /// Fixed overlap; `None` derives it from the job's hiding kernel. A
    /// fixed value smaller than the kernel needs is raised to that need.
    pub overlap: Option<u64>,
    pub poll_interval: Duration,
    pub snapshot_every: u64,
}

impl ManagerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            heartbeat_timeout: Duration::from_secs(30),
            max_attempts: 3,
            core_size: 250,
            overlap: None,
            poll_interval: Duration::from_secs(1),
            snapshot_every: 1000,
        }
    }

    /// Reads `MASK_HEARTBEAT_TIMEOUT_SECS` on top of the defaults.
    pub fn with_env(mut self) -> Result<Self, ManagerError> {
        if let Ok(v) = std::env::var("MASK_HEARTBEAT_TIMEOUT_SECS") {
            let secs: f64 = v
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite() && *s > 0.0)
                .ok_or_else(|| ManagerError::Parameter(format!("MASK_HEARTBEAT_TIMEOUT_SECS={v:?} is not a positive number")))?;
            self.heartbeat_timeout = Duration::from_secs_f64(secs);
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubmitJobRequest {
    /// Video path readable by the manager and its workers.
    pub video: String,
    #[serde(default)]
    pub audio: Option<String>,
    #[serde(default)]
    pub detections: Option<String>,
    /// Full config document; ignored when `preset` is set.
    #[serde(default)]
    pub config: Option<Value>,
    #[serde(default)]
    pub preset: Option<String>,
    /// Deep-merged onto the preset.
    #[serde(default)]
    pub overrides: Option<Value>,
}

/// A job plus the state of each of its chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    #[serde(flatten)]
    pub job: Job,
    pub chunk_states: Vec<Chunk>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputPart {
    Video,
    Audio,
    KinematicsJson,
    KinematicsCsv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportOutcome {
    pub accepted: bool,
    /// Job whose last chunk just completed and now needs merging.
    pub merge: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ChunkSide {
    kinematics: Vec<KinematicsFrame>,
    skips: Vec<SkipRecord>,
}

struct Inner {
    state: ManagerState,
    journal: Journal,
}

impl Inner {
    fn commit(&mut self, event: Event) -> Result<(), ManagerError> {
        self.journal.append(&event)?;
        self.state.apply(&event);
        self.journal.maybe_snapshot(&self.state)
    }
}

pub struct Manager {
    config: ManagerConfig,
    clock: Arc<dyn Clock>,
    presets: PresetStore,
    inner: Mutex<Inner>,
}

fn from_pipeline(e: PipelineError) -> ManagerError {
    match e {
        PipelineError::Config { path, message } => ManagerError::Validation { path, message },
        PipelineError::NotFound(m) => ManagerError::NotFound(m),
        other => ManagerError::Input(other.to_string()),
    }
}

impl Manager {
    pub fn open(config: ManagerConfig, clock: Arc<dyn Clock>) -> Result<Self, ManagerError> {
        fs::create_dir_all(config.data_dir.join("jobs"))?;
        let (journal, state) = Journal::open(&config.data_dir.join("state"), config.snapshot_every)?;
        Ok(Self {
            config,
            clock,
            presets: PresetStore::builtin(),
            inner: Mutex::new(Inner { state, journal }),
        })
    }

    pub fn config(&self) -> &ManagerConfig {
        &self.config
    }

    pub fn presets(&self) -> &PresetStore {
        &self.presets
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Copy of the full orchestration state.
    pub fn state(&self) -> ManagerState {
        self.lock().state.clone()
    }

    fn job_dir(&self, job_id: &str) -> PathBuf {
        self.config.data_dir.join("jobs").join(job_id)
    }

    fn resolve_config(&self, req: &SubmitJobRequest) -> Result<MaskingConfig, ManagerError> {
        match &req.preset {
            Some(name) => self.presets.resolve(name, req.overrides.as_ref()).map_err(from_pipeline),
            None => {
                let doc = req.config.clone().unwrap_or_else(|| Value::Object(Default::default()));
                mask_core::pipeline::validate_config(&doc).map_err(from_pipeline)
            }
        }
    }

    /// Validates, plans and persists a job. Nothing is recorded on error.
    pub fn submit_job(&self, req: SubmitJobRequest) -> Result<JobView, ManagerError> {
        let config = self.resolve_config(&req)?;
        let mut inner = self.lock();
        let id = inner.state.next_job_id();
        let dir = self.job_dir(&id);
        let result = self.prepare_job(&id, &dir, &req, config);
        let (job, chunks) = match result {
            Ok(v) => v,
            Err(e) => {
                let _ = fs::remove_dir_all(&dir);
                return Err(e);
            }
        };
        let now = self.clock.now_ms();
        let job = Job {
            created_ms: now,
            updated_ms: now,
            ..job
        };
        inner.commit(Event::JobSubmitted {
            job: job.clone(),
            chunks: chunks.clone(),
        })?;
        Ok(JobView { job, chunk_states: chunks })
    }

    fn prepare_job(
        &self,
        id: &str,
        dir: &Path,
        req: &SubmitJobRequest,
        config: MaskingConfig,
    ) -> Result<(Job, Vec<Chunk>), ManagerError> {
        let input = |m: String| ManagerError::Input(m);
        let video_path = fs::canonicalize(&req.video).map_err(|e| input(format!("video {:?}: {e}", req.video)))?;
        let mut audio = req.audio.clone();
        let (video, header) = if rvf::is_rvf(&video_path)? {
            let header = read_rvf_header(&video_path).map_err(|e| input(format!("video: {e}")))?;
            (video_path, header)
        } else {
            // other containers are decoded once into the job directory
            fs::create_dir_all(dir)?;
            let tc = Transcoder::from_env();
            let stream = tc.decode(&video_path).map_err(|e| input(format!("video: {e}")))?;
            let header = *stream.header();
            let frames: Vec<_> = stream.collect::<Result<_, _>>().map_err(|e| input(format!("video: {e}")))?;
            let out = dir.join("input.rvf");
            let header = VideoHeader {
                frame_count: frames.len() as u32,
                ..header
            };
            write_rvf_file(&out, &header, &frames).map_err(|e| input(e.to_string()))?;
            if audio.is_none() {
                let wav = dir.join("input.wav");
                match tc.extract_audio(&video_path, &wav) {
                    Ok(()) => audio = Some(wav.to_string_lossy().into_owned()),
                    Err(e) => log::warn!("job {id}: no audio extracted: {e}"),
                }
            }
            (out, header)
        };
        if header.frame_count == 0 {
            return Err(input("video has no frames".into()));
        }
        let audio = match audio {
            Some(a) => {
                let p = fs::canonicalize(&a).map_err(|e| input(format!("audio {a:?}: {e}")))?;
                read_wav_file(&p).map_err(|e| input(format!("audio: {e}")))?;
                Some(p.to_string_lossy().into_owned())
            }
            None => None,
        };
        if config.voice.strategy == VoiceStrategy::Switch && audio.is_none() {
            return Err(ManagerError::Validation {
                path: "voice.strategy".into(),
                message: "voice switch needs an audio track".into(),
            });
        }
        let detections = match req.detections.as_ref().or(config.detections.as_ref()) {
            Some(d) => {
                let p = fs::canonicalize(d).map_err(|e| input(format!("detections {d:?}: {e}")))?;
                let text = fs::read_to_string(&p)?;
                let timeline = parse_detections(&text).map_err(|e| input(format!("detections: {e}")))?;
                if (timeline.width, timeline.height) != (header.width, header.height) {
                    return Err(input(format!(
                        "detections are {}x{} but video is {}x{}",
                        timeline.width, timeline.height, header.width, header.height
                    )));
                }
                Some(p.to_string_lossy().into_owned())
            }
            None => None,
        };
        let overlap = self.config.overlap.unwrap_or(0).max(config.auto_overlap());
        let plans = plan_chunks(u64::from(header.frame_count), self.config.core_size, overlap)?;
        let chunks: Vec<Chunk> = plans
            .iter()
            .enumerate()
            .map(|(i, p)| Chunk {
                id: format!("{id}-c{i:04}"),
                job_id: id.to_string(),
                core: [p.core.start, p.core.end],
                input: [p.input.start, p.input.end],
                state: ChunkState::Pending,
                worker: None,
                attempt: 1,
                result: None,
                last_error: None,
            })
            .collect();
        let job = Job {
            id: id.to_string(),
            video: video.to_string_lossy().into_owned(),
            audio,
            detections,
            config,
            header,
            state: JobState::Queued,
            chunks: chunks.iter().map(|c| c.id.clone()).collect(),
            max_attempts: self.config.max_attempts,
            created_ms: 0,
            updated_ms: 0,
            progress: 0.0,
            output: None,
            error: None,
        };
        Ok((job, chunks))
    }

    fn view(state: &ManagerState, job: &Job) -> JobView {
        JobView {
            job: job.clone(),
            chunk_states: job.chunks.iter().filter_map(|c| state.chunks.get(c).cloned()).collect(),
        }
    }

    pub fn list_jobs(&self) -> Vec<JobView> {
        let inner = self.lock();
        let s = &inner.state;
        s.job_order.iter().filter_map(|id| s.jobs.get(id)).map(|j| Self::view(s, j)).collect()
    }

    pub fn job_status(&self, job_id: &str) -> Result<JobView, ManagerError> {
        let inner = self.lock();
        let job = inner
            .state
            .jobs
            .get(job_id)
            .ok_or_else(|| ManagerError::NotFound(format!("job {job_id}")))?;
        Ok(Self::view(&inner.state, job))
    }

    pub fn register_worker(&self, capabilities: Vec<String>) -> Result<RegisterResponse, ManagerError> {
        let mut inner = self.lock();
        let now = self.clock.now_ms();
        let worker = WorkerRecord {
            id: inner.state.next_worker_id(),
            capabilities,
            registered_ms: now,
            last_heartbeat_ms: now,
            state: WorkerState::Idle,
        };
        let worker_id = worker.id.clone();
        inner.commit(Event::WorkerRegistered { worker })?;
        Ok(RegisterResponse {
            worker_id,
            poll_interval: self.config.poll_interval.as_secs_f64(),
        })
    }

    fn known_worker(state: &ManagerState, worker_id: &str) -> Result<WorkerRecord, ManagerError> {
        state
            .workers
            .get(worker_id)
            .cloned()
            .ok_or_else(|| ManagerError::Forbidden(format!("unknown worker {worker_id}")))
    }

    /// Refreshes liveness. A worker previously declared lost rejoins.
    pub fn heartbeat(&self, worker_id: &str) -> Result<HeartbeatResponse, ManagerError> {
        let mut inner = self.lock();
        Self::known_worker(&inner.state, worker_id)?;
        let at = self.clock.now_ms();
        inner.commit(Event::Heartbeat {
            worker_id: worker_id.to_string(),
            at,
        })?;
        self.reap_locked(&mut inner)?;
        let state = match inner.state.workers[worker_id].state {
            WorkerState::Idle => "idle",
            WorkerState::Busy => "busy",
            WorkerState::Lost => "lost",
        };
        Ok(HeartbeatResponse {
            worker_id: worker_id.to_string(),
            state: state.into(),
        })
    }

    /// Hands the oldest compatible pending chunk to the worker. A worker
    /// that already holds a chunk gets the same assignment back.
    pub fn claim_chunk(&self, worker_id: &str) -> Result<Option<ChunkAssignment>, ManagerError> {
        let mut inner = self.lock();
        self.reap_locked(&mut inner)?;
        let worker = Self::known_worker(&inner.state, worker_id)?;
        if worker.state == WorkerState::Lost {
            return Err(ManagerError::Forbidden(format!("worker {worker_id} is marked lost; heartbeat to rejoin")));
        }
        let chunk_id = match inner.state.assigned_to(worker_id) {
            Some(c) => c.id.clone(),
            None => {
                let Some(c) = inner.state.next_claimable(&worker.capabilities) else {
                    return Ok(None);
                };
                let chunk_id = c.id.clone();
                let at = self.clock.now_ms();
                inner.commit(Event::ChunkClaimed {
                    chunk_id: chunk_id.clone(),
                    worker_id: worker_id.to_string(),
                    at,
                })?;
                chunk_id
            }
        };
        let chunk = &inner.state.chunks[&chunk_id];
        let job = &inner.state.jobs[&chunk.job_id];
        Ok(Some(ChunkAssignment {
            chunk_id: chunk.id.clone(),
            job_id: job.id.clone(),
            attempt: chunk.attempt,
            core: chunk.core,
            input: chunk.input,
            total_frames: u64::from(job.header.frame_count),
            video: job.video.clone(),
            detections: job.detections.clone(),
            config: job.config.clone(),
        }))
    }

    /// Records a worker's result for a chunk it holds. Duplicate reports of
    /// an already completed chunk are ignored.
    pub fn report_chunk(&self, chunk_id: &str, report: ChunkReport) -> Result<ReportOutcome, ManagerError> {
        let mut inner = self.lock();
        let chunk = inner
            .state
            .chunks
            .get(chunk_id)
            .cloned()
            .ok_or_else(|| ManagerError::NotFound(format!("chunk {chunk_id}")))?;
        Self::known_worker(&inner.state, &report.worker_id)?;
        let holder = chunk.worker.as_deref() == Some(report.worker_id.as_str());
        if chunk.state == ChunkState::Done && holder {
            return Ok(ReportOutcome { accepted: false, merge: None });
        }
        if chunk.state != ChunkState::Assigned || !holder || chunk.attempt != report.attempt {
            return Err(ManagerError::Forbidden(format!(
                "worker {} does not hold chunk {chunk_id} (attempt {})",
                report.worker_id, report.attempt
            )));
        }
        let at = self.clock.now_ms();
        let (frames_rvf, side) = match report.outcome {
            ChunkOutcome::Failed { error } => {
                inner.commit(Event::ChunkFailed {
                    chunk_id: chunk_id.to_string(),
                    error,
                    at,
                })?;
                return Ok(ReportOutcome { accepted: true, merge: None });
            }
            ChunkOutcome::Completed {
                frames_rvf,
                kinematics,
                skips,
            } => (frames_rvf, ChunkSide { kinematics, skips }),
        };
        let header = inner.state.jobs[&chunk.job_id].header;
        let checked = decode_payload(&frames_rvf)
            .map_err(|e| e.to_string())
            .and_then(|bytes| {
                let (h, _) = read_rvf(bytes.as_slice()).map_err(|e| e.to_string())?;
                if (h.width, h.height) != (header.width, header.height) || u64::from(h.frame_count) != chunk.core_len() {
                    return Err(format!(
                        "result is {}x{} with {} frames, expected {}x{} with {}",
                        h.width,
                        h.height,
                        h.frame_count,
                        header.width,
                        header.height,
                        chunk.core_len()
                    ));
                }
                Ok(bytes)
            });
        let bytes = match checked {
            Ok(b) => b,
            Err(why) => {
                inner.commit(Event::ChunkFailed {
                    chunk_id: chunk_id.to_string(),
                    error: format!("invalid result payload: {why}"),
                    at,
                })?;
                return Err(ManagerError::Input(format!("invalid result payload: {why}")));
            }
        };
        let dir = self.job_dir(&chunk.job_id).join("chunks");
        fs::create_dir_all(&dir)?;
        let result = dir.join(format!("{chunk_id}.rvf"));
        fs::write(&result, &bytes)?;
        fs::write(dir.join(format!("{chunk_id}.side.json")), serde_json::to_vec(&side).expect("serializes"))?;
        inner.commit(Event::ChunkCompleted {
            chunk_id: chunk_id.to_string(),
            worker_id: report.worker_id,
            result: result.to_string_lossy().into_owned(),
            at,
        })?;
        let mut merge = None;
        if inner.state.all_chunks_done(&chunk.job_id) && inner.state.jobs[&chunk.job_id].state.accepts_work() {
            inner.commit(Event::MergeStarted {
                job_id: chunk.job_id.clone(),
                at,
            })?;
            merge = Some(chunk.job_id.clone());
        }
        Ok(ReportOutcome { accepted: true, merge })
    }

    fn reap_locked(&self, inner: &mut Inner) -> Result<Vec<String>, ManagerError> {
        let now = self.clock.now_ms();
        let timeout = self.config.heartbeat_timeout.as_millis() as u64;
        let stale: Vec<String> = inner
            .state
            .workers
            .values()
            .filter(|w| w.state != WorkerState::Lost && now.saturating_sub(w.last_heartbeat_ms) > timeout)
            .map(|w| w.id.clone())
            .collect();
        let mut requeued = Vec::new();
        for worker_id in stale {
            if let Some(c) = inner.state.assigned_to(&worker_id) {
                requeued.push(c.id.clone());
            }
            log::warn!("worker {worker_id} missed its heartbeat deadline");
            inner.commit(Event::WorkerLost { worker_id, at: now })?;
        }
        Ok(requeued)
    }

    /// Marks silent workers lost and returns the ids of chunks taken back
    /// from them.
    pub fn reap_stale(&self) -> Result<Vec<String>, ManagerError> {
        let mut inner = self.lock();
        self.reap_locked(&mut inner)
    }

    /// Jobs whose chunks are all done but whose output is not yet built,
    /// e.g. after a restart interrupted a merge.
    pub fn pending_merges(&self) -> Vec<String> {
        let inner = self.lock();
        inner
            .state
            .job_order
            .iter()
            .filter(|id| inner.state.jobs[*id].state == JobState::Merging)
            .cloned()
            .collect()
    }

    /// Assembles the final outputs of a job in the merging state. Safe to
    /// repeat: a finished job is left as is.
    pub fn merge_job(&self, job_id: &str) -> Result<JobView, ManagerError> {
        let (job, chunks) = {
            let inner = self.lock();
            let job = inner
                .state
                .jobs
                .get(job_id)
                .cloned()
                .ok_or_else(|| ManagerError::NotFound(format!("job {job_id}")))?;
            if job.state != JobState::Merging {
                return Ok(Self::view(&inner.state, &job));
            }
            let chunks: Vec<Chunk> = job.chunks.iter().map(|c| inner.state.chunks[c].clone()).collect();
            (job, chunks)
        };
        let merged = assemble(&self.job_dir(job_id), &job, &chunks);
        let mut inner = self.lock();
        let at = self.clock.now_ms();
        match merged {
            Ok(output) => inner.commit(Event::JobDone {
                job_id: job_id.to_string(),
                output,
                at,
            })?,
            Err(e) => {
                log::error!("merge of {job_id} failed: {e}");
                inner.commit(Event::JobFailed {
                    job_id: job_id.to_string(),
                    reason: format!("merge failed: {e}"),
                    at,
                })?
            }
        }
        let job = &inner.state.jobs[job_id];
        Ok(Self::view(&inner.state, job))
    }

    pub fn output_path(&self, job_id: &str, part: OutputPart) -> Result<PathBuf, ManagerError> {
        let inner = self.lock();
        let job = inner
            .state
            .jobs
            .get(job_id)
            .ok_or_else(|| ManagerError::NotFound(format!("job {job_id}")))?;
        let Some(out) = &job.output else {
            return Err(ManagerError::Conflict(format!("job {job_id} has no output yet ({:?})", job.state)));
        };
        let path = match part {
            OutputPart::Video => Some(&out.video),
            OutputPart::Audio => out.audio.as_ref(),
            OutputPart::KinematicsJson => out.kinematics_json.as_ref(),
            OutputPart::KinematicsCsv => out.kinematics_csv.as_ref(),
        };
        path.map(PathBuf::from)
            .ok_or_else(|| ManagerError::NotFound(format!("job {job_id} produced no {part:?} output")))
    }
}

/// Concatenates chunk cores into the output video, runs the voice strategy
/// over the whole audio track and writes the kinematics exports.
fn assemble(dir: &Path, job: &Job, chunks: &[Chunk]) -> Result<JobOutput, ManagerError> {
    let storage = |e: mask_core::media::MediaError| ManagerError::Storage(e.to_string());
    fs::create_dir_all(dir)?;
    let video_path = dir.join("output.rvf");
    let mut writer = RvfWriter::new(std::io::BufWriter::new(fs::File::create(&video_path)?), job.header).map_err(storage)?;
    let mut ordered: Vec<&Chunk> = chunks.iter().collect();
    ordered.sort_by_key(|c| c.core[0]);
    let mut kinematics = Vec::new();
    let mut skipped = 0;
    for c in &ordered {
        let result = c
            .result
            .as_ref()
            .ok_or_else(|| ManagerError::Storage(format!("chunk {} has no result", c.id)))?;
        let (_, frames) = read_rvf_file(Path::new(result)).map_err(storage)?;
        for f in &frames {
            writer.write_frame(f).map_err(storage)?;
        }
        let side: ChunkSide = serde_json::from_slice(&fs::read(Path::new(result).with_extension("side.json"))?)
            .map_err(|e| ManagerError::Storage(format!("chunk {} side data: {e}", c.id)))?;
        kinematics.extend(side.kinematics);
        skipped += side.skips.len();
    }
    writer.finish().map_err(storage)?;

    let mut output = JobOutput {
        video: video_path.to_string_lossy().into_owned(),
        skipped_overlays: skipped,
        ..Default::default()
    };
    if let Some(audio) = &job.audio {
        let clip = read_wav_file(Path::new(audio)).map_err(storage)?;
        let (processed, report) =
            apply_voice_strategy(Some(&clip), &job.config.voice).map_err(|e| ManagerError::Storage(e.to_string()))?;
        if let Some(mc) = report.mcadams.filter(|m| m.fallback_frames > 0) {
            log::warn!("job {}: {} of {} voice frames passed through unwarped", job.id, mc.fallback_frames, mc.frames);
        }
        if let Some(clip) = processed {
            let p = dir.join("output.wav");
            write_wav_file(&p, &clip).map_err(storage)?;
            output.audio = Some(p.to_string_lossy().into_owned());
        }
    }
    let exports = job.config.exports;
    if exports.any() {
        let doc = KinematicsDocument {
            video: VideoMeta {
                width: job.header.width,
                height: job.header.height,
                fps: job.header.fps,
                frame_count: u64::from(job.header.frame_count),
                source: Some(job.video.clone()),
            },
            frames: kinematics,
        };
        for (on, format, name, slot) in [
            (exports.kinematics_json, KinematicsFormat::Json, "kinematics.json", &mut output.kinematics_json),
            (exports.kinematics_csv, KinematicsFormat::Csv, "kinematics.csv", &mut output.kinematics_csv),
        ] {
            if on {
                let p = dir.join(name);
                fs::write(&p, export_kinematics(&doc, format).map_err(from_pipeline)?)?;
                *slot = Some(p.to_string_lossy().into_owned());
            }
        }
    }
    Ok(output)
}
