//! Worker runtime: register with a manager, then loop claiming chunks,
//! running the masking pipeline over each chunk's input range and uploading
//! the core-range frames.

mod client;
mod execute;

pub use client::{ClientError, ManagerClient};
pub use execute::{execute_chunk, ChunkResult};

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use mask_core::protocol::{ChunkOutcome, ChunkReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkerError {
    #[error("invalid worker config: {0}")]
    Config(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("could not start worker thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct WorkerConfig {
    pub manager_url: String,
    pub capabilities: Vec<String>,
    /// Idle time between claims; the manager's advertised interval wins
    /// when it is longer.
    pub poll_interval: Duration,
    pub heartbeat_interval: Duration,
    /// Frames processed concurrently within a chunk.
    pub parallelism: usize,
    pub max_backoff: Duration,
}

impl WorkerConfig {
    pub fn new(manager_url: impl Into<String>) -> Self {
        Self {
            manager_url: manager_url.into(),
            capabilities: mask_core::pipeline::all_capabilities(),
            poll_interval: Duration::from_secs(1),
            heartbeat_interval: Duration::from_secs(5),
            parallelism: 1,
            max_backoff: Duration::from_secs(60),
        }
    }

    pub fn validate(&self) -> Result<(), WorkerError> {
        if self.poll_interval < Duration::from_secs(1) {
            return Err(WorkerError::Config(format!("poll interval {:?} is below 1 s", self.poll_interval)));
        }
        if self.parallelism == 0 {
            return Err(WorkerError::Config("parallelism must be >= 1".into()));
        }
        if self.heartbeat_interval.is_zero() {
            return Err(WorkerError::Config("heartbeat interval must be positive".into()));
        }
        Ok(())
    }
}

/// Stops a running worker. `stop` lets the current chunk finish and be
/// reported; `kill` abandons it and silences heartbeats at once, the way a
/// crashed process would look to the manager.
#[derive(Debug, Clone)]
pub struct WorkerControl {
    stop: Arc<AtomicBool>,
    kill: Arc<AtomicBool>,
    crash_at: Arc<AtomicUsize>,
}

impl Default for WorkerControl {
    fn default() -> Self {
        Self {
            stop: Arc::default(),
            kill: Arc::default(),
            crash_at: Arc::new(AtomicUsize::new(usize::MAX)),
        }
    }
}

impl WorkerControl {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fault injection: the worker kills itself right after its `n`th
    /// successful claim, so it dies holding that chunk.
    pub fn crash_after_claims(&self, n: usize) {
        self.crash_at.store(n, Ordering::SeqCst);
    }

    pub fn is_killed(&self) -> bool {
        self.killed()
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    pub fn kill(&self) {
        self.kill.store(true, Ordering::SeqCst);
        self.stop();
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn killed(&self) -> bool {
        self.kill.load(Ordering::SeqCst)
    }

    /// Sleeps up to `d`, returning early once stopped.
    fn sleep(&self, d: Duration) {
        let end = Instant::now() + d;
        while !self.stopped() {
            let now = Instant::now();
            if now >= end {
                break;
            }
            thread::sleep((end - now).min(Duration::from_millis(20)));
        }
    }
}

/// Observable worker progress, mostly for tests and logs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkerStats {
    pub worker_id: String,
    pub completed: usize,
    pub failed: usize,
}

struct Backoff {
    next: Duration,
    cap: Duration,
}

impl Backoff {
    fn new(cap: Duration) -> Self {
        Self {
            next: Duration::from_secs(1),
            cap,
        }
    }

    fn step(&mut self) -> Duration {
        let d = self.next;
        self.next = (self.next * 2).min(self.cap);
        d
    }

    fn reset(&mut self) {
        self.next = Duration::from_secs(1);
    }
}

fn register_with_retry(
    client: &ManagerClient,
    config: &WorkerConfig,
    control: &WorkerControl,
) -> Result<Option<(String, Duration)>, WorkerError> {
    let mut backoff = Backoff::new(config.max_backoff);
    loop {
        if control.stopped() {
            return Ok(None);
        }
        match client.register(&config.capabilities) {
            Ok(r) => {
                let poll = Duration::from_secs_f64(r.poll_interval.max(0.0)).max(config.poll_interval);
                log::info!("registered as {} (poll {:?})", r.worker_id, poll);
                return Ok(Some((r.worker_id, poll)));
            }
            Err(e) if e.is_transient() => {
                let d = backoff.step();
                log::warn!("manager unavailable ({e}); retrying in {d:?}");
                control.sleep(d);
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Background heartbeat loop. Ends when the worker stops or `retire` is
/// set, the latter used when the worker re-registers under a new id.
struct Heartbeat {
    retire: Arc<AtomicBool>,
    thread: thread::JoinHandle<()>,
}

impl Heartbeat {
    fn spawn(client: ManagerClient, worker_id: String, every: Duration, control: WorkerControl) -> Self {
        let retire = Arc::new(AtomicBool::new(false));
        let flag = retire.clone();
        let thread = thread::spawn(move || {
            while !control.stopped() && !flag.load(Ordering::SeqCst) {
                if let Err(e) = client.heartbeat(&worker_id) {
                    log::warn!("heartbeat failed: {e}");
                }
                let end = Instant::now() + every;
                while Instant::now() < end && !control.stopped() && !flag.load(Ordering::SeqCst) {
                    thread::sleep(Duration::from_millis(20));
                }
            }
        });
        Self { retire, thread }
    }

    fn retire(self) {
        self.retire.store(true, Ordering::SeqCst);
        let _ = self.thread.join();
    }
}

/// Runs until stopped through `control`. Manager outages are retried with
/// exponential backoff; chunk errors are reported and the loop continues.
pub fn run_worker(config: WorkerConfig, control: WorkerControl) -> Result<WorkerStats, WorkerError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| WorkerError::Pool(e.to_string()))?;
    let client = ManagerClient::new(&config.manager_url)?;
    let Some((mut worker_id, mut poll)) = register_with_retry(&client, &config, &control)? else {
        return Ok(WorkerStats::default());
    };
    let mut stats = WorkerStats {
        worker_id: worker_id.clone(),
        ..Default::default()
    };
    let mut heart = Heartbeat::spawn(client.clone(), worker_id.clone(), config.heartbeat_interval, control.clone());
    let mut backoff = Backoff::new(config.max_backoff);
    let mut claims = 0usize;

    while !control.stopped() {
        let assignment = match client.claim(&worker_id) {
            Ok(a) => {
                backoff.reset();
                a
            }
            Err(ClientError::Status { status: 403, .. }) => {
                // declared lost or forgotten: a heartbeat revives a known
                // worker, otherwise start over under a new id
                if client.heartbeat(&worker_id).is_err() {
                    let Some((id, p)) = register_with_retry(&client, &config, &control)? else { break };
                    heart.retire();
                    worker_id = id;
                    poll = p;
                    stats.worker_id = worker_id.clone();
                    heart = Heartbeat::spawn(client.clone(), worker_id.clone(), config.heartbeat_interval, control.clone());
                }
                continue;
            }
            Err(e) if e.is_transient() => {
                let d = backoff.step();
                log::warn!("claim failed ({e}); retrying in {d:?}");
                control.sleep(d);
                continue;
            }
            Err(e) => {
                log::error!("claim rejected: {e}");
                control.sleep(poll);
                continue;
            }
        };
        let Some(a) = assignment else {
            control.sleep(poll);
            continue;
        };
        claims += 1;
        if claims >= control.crash_at.load(Ordering::SeqCst) {
            log::warn!("injected crash while holding chunk {}", a.chunk_id);
            control.kill();
            break;
        }
        log::info!("chunk {} frames {:?} (attempt {})", a.chunk_id, a.core, a.attempt);
        let outcome = match pool.install(|| execute_chunk(&a)) {
            Ok(r) => {
                stats.completed += 1;
                r.into_outcome()
            }
            Err(e) => {
                stats.failed += 1;
                log::error!("chunk {} failed: {e}", a.chunk_id);
                ChunkOutcome::Failed { error: e.to_string() }
            }
        };
        if control.killed() {
            break;
        }
        let report = ChunkReport {
            worker_id: worker_id.clone(),
            attempt: a.attempt,
            outcome,
        };
        let mut retry = Backoff::new(config.max_backoff);
        loop {
            match client.report(&a.chunk_id, &report) {
                Ok(r) if !r.accepted => {
                    log::info!("report for {} was a duplicate", a.chunk_id);
                    break;
                }
                Ok(_) => break,
                Err(e) if e.is_transient() && !control.killed() => {
                    let d = retry.step();
                    log::warn!("report failed ({e}); retrying in {d:?}");
                    // a plain stop still delivers the finished chunk
                    thread::sleep(d);
                }
                Err(e) => {
                    log::error!("report for {} rejected: {e}", a.chunk_id);
                    break;
                }
            }
        }
    }
    control.stop();
    heart.retire();
    Ok(stats)
}
