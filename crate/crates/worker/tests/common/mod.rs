#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use mask_core::detection::{BBox, DetectionTimeline, FrameDetections, PersonDetection};
use mask_core::media::rvf::{header_for, write_rvf_file};
use mask_core::{FrameBuffer, Rational};
use mask_manager::{JobState, Manager, ManagerConfig, SubmitJobRequest, SystemClock};
use mask_worker::{run_worker, WorkerConfig, WorkerControl, WorkerError, WorkerStats};
use serde_json::Value;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub video: PathBuf,
    pub detections: PathBuf,
    pub frames: Vec<FrameBuffer>,
    pub timeline: DetectionTimeline,
}

pub fn fixture(n: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (20, 12);
    let fps = Rational { num: 25, den: 1 };
    let frames: Vec<_> = (0..n)
        .map(|i| {
            let px = (0..w * h * 3).map(|k| ((u64::from(k) * 11 + i * 37) % 256) as u8).collect();
            FrameBuffer::new(w, h, i, px).unwrap()
        })
        .collect();
    let video = dir.path().join("in.rvf");
    write_rvf_file(&video, &header_for(&frames, fps).unwrap(), &frames).unwrap();
    let mut timeline = DetectionTimeline::new(w, h, fps);
    for i in 0..n {
        timeline.frames.push(FrameDetections {
            index: i,
            persons: vec![PersonDetection::boxed("p0", BBox::new((i % 10) as i64, 2, 7, 8), 0.9)],
        });
    }
    let detections = dir.path().join("det.json");
    std::fs::write(&detections, timeline.to_json()).unwrap();
    Fixture {
        dir,
        video,
        detections,
        frames,
        timeline,
    }
}

pub fn manager(f: &Fixture, core_size: u64, heartbeat_timeout: Duration) -> Arc<Manager> {
    let mut cfg = ManagerConfig::new(f.dir.path().join("data"));
    cfg.core_size = core_size;
    cfg.heartbeat_timeout = heartbeat_timeout;
    Arc::new(Manager::open(cfg, Arc::new(SystemClock)).unwrap())
}

pub fn request(f: &Fixture, config: Value) -> SubmitJobRequest {
    SubmitJobRequest {
        video: f.video.to_string_lossy().into_owned(),
        detections: Some(f.detections.to_string_lossy().into_owned()),
        config: Some(config),
        ..Default::default()
    }
}

pub fn worker_config(url: &str) -> WorkerConfig {
    let mut c = WorkerConfig::new(url);
    c.heartbeat_interval = Duration::from_millis(100);
    c
}

pub fn spawn_worker(config: WorkerConfig) -> (WorkerControl, thread::JoinHandle<Result<WorkerStats, WorkerError>>) {
    let control = WorkerControl::new();
    let c = control.clone();
    (control, thread::spawn(move || run_worker(config, c)))
}

/// Polls until every listed job is terminal or `limit` passes.
pub fn wait_terminal(m: &Manager, jobs: &[String], limit: Duration) -> bool {
    let start = Instant::now();
    while start.elapsed() < limit {
        if jobs.iter().all(|j| m.job_status(j).unwrap().job.state.is_terminal()) {
            return true;
        }
        thread::sleep(Duration::from_millis(25));
    }
    false
}

pub fn state_of(m: &Manager, job: &str) -> JobState {
    m.job_status(job).unwrap().job.state
}
