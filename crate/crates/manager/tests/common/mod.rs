#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use mask_core::detection::{BBox, DetectionTimeline, FrameDetections, PersonDetection};
use mask_core::media::rvf::{encode_rvf, header_for, read_rvf_range, write_rvf_file};
use mask_core::pipeline::process_segment;
use mask_core::protocol::{encode_payload, ChunkAssignment, ChunkOutcome, ChunkReport};
use mask_core::{FrameBuffer, Rational};
use mask_manager::{ManualClock, Manager, ManagerConfig, SubmitJobRequest};
use serde_json::{json, Value};

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub video: PathBuf,
    pub detections: PathBuf,
    pub frames: Vec<FrameBuffer>,
    pub timeline: DetectionTimeline,
}

pub fn frames(n: u64, w: u32, h: u32) -> Vec<FrameBuffer> {
    (0..n)
        .map(|i| {
            let px = (0..w * h * 3).map(|k| ((u64::from(k) * 13 + i * 29) % 256) as u8).collect();
            FrameBuffer::new(w, h, i, px).unwrap()
        })
        .collect()
}

pub fn fixture(n: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let (w, h) = (24, 16);
    let frames = frames(n, w, h);
    let fps = Rational { num: 25, den: 1 };
    let video = dir.path().join("in.rvf");
    write_rvf_file(&video, &header_for(&frames, fps).unwrap(), &frames).unwrap();
    let mut timeline = DetectionTimeline::new(w, h, fps);
    for i in 0..n {
        timeline.frames.push(FrameDetections {
            index: i,
            persons: vec![PersonDetection::boxed("p0", BBox::new((i % 12) as i64, 3, 8, 9), 0.9)],
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

pub fn manager_at(data: &Path, clock: Arc<ManualClock>, core_size: u64) -> Manager {
    let mut cfg = ManagerConfig::new(data);
    cfg.core_size = core_size;
    Manager::open(cfg, clock).unwrap()
}

pub fn request(f: &Fixture, config: Value) -> SubmitJobRequest {
    SubmitJobRequest {
        video: f.video.to_string_lossy().into_owned(),
        detections: Some(f.detections.to_string_lossy().into_owned()),
        config: Some(config),
        ..Default::default()
    }
}

pub fn blackout() -> Value {
    json!({"hiding": {"strategy": "blackout"}})
}

/// Runs an assignment the way a worker would and builds its report.
pub fn execute(a: &ChunkAssignment, worker_id: &str, timeline: &DetectionTimeline) -> ChunkReport {
    let (_, input) = read_rvf_range(Path::new(&a.video), a.input[0] as u32..a.input[1] as u32).unwrap();
    let out = process_segment(&input, a.core[0]..a.core[1], a.total_frames, timeline, &a.config).unwrap();
    let header = header_for(&out.frames, Rational { num: 25, den: 1 }).unwrap();
    ChunkReport {
        worker_id: worker_id.into(),
        attempt: a.attempt,
        outcome: ChunkOutcome::Completed {
            frames_rvf: encode_payload(&encode_rvf(&header, &out.frames).unwrap()),
            kinematics: out.kinematics,
            skips: out.skips,
        },
    }
}

pub fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}
