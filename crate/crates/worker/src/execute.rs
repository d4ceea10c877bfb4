use std::fs;
use std::path::Path;

use mask_core::detection::{parse_detections, DetectionTimeline};
use mask_core::media::rvf::{encode_rvf, read_rvf_range};
use mask_core::media::MediaError;
use mask_core::pipeline::{process_segment, KinematicsFrame, PipelineError, SkipRecord};
use mask_core::protocol::{encode_payload, ChunkAssignment, ChunkOutcome};
use mask_core::VideoHeader;

/// Output of one chunk: the core frames as an RVF stream plus side data.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub rvf: Vec<u8>,
    pub kinematics: Vec<KinematicsFrame>,
    pub skips: Vec<SkipRecord>,
}

impl ChunkResult {
    pub fn into_outcome(self) -> ChunkOutcome {
        ChunkOutcome::Completed {
            frames_rvf: encode_payload(&self.rvf),
            kinematics: self.kinematics,
            skips: self.skips,
        }
    }
}

fn frame_index(v: u64) -> Result<u32, PipelineError> {
    u32::try_from(v).map_err(|_| PipelineError::Parameter(format!("frame index {v} out of range")))
}

/// Reads the assignment's input range from shared storage and masks it.
/// Runs frame work on the current rayon pool.
pub fn execute_chunk(a: &ChunkAssignment) -> Result<ChunkResult, PipelineError> {
    if a.input[0] > a.core[0] || a.core[1] > a.input[1] {
        return Err(PipelineError::Parameter(format!(
            "core {:?} is not inside input {:?}",
            a.core, a.input
        )));
    }
    let range = frame_index(a.input[0])?..frame_index(a.input[1])?;
    let (header, frames) = read_rvf_range(Path::new(&a.video), range)?;
    if u64::from(header.frame_count) != a.total_frames {
        return Err(PipelineError::Parameter(format!(
            "video has {} frames, assignment expects {}",
            header.frame_count, a.total_frames
        )));
    }
    let timeline = match &a.detections {
        Some(p) => parse_detections(&fs::read_to_string(p).map_err(MediaError::from)?)?,
        None => DetectionTimeline::new(header.width, header.height, header.fps),
    };
    let out = process_segment(&frames, a.core[0]..a.core[1], a.total_frames, &timeline, &a.config)?;
    let core_header = VideoHeader {
        frame_count: out.frames.len() as u32,
        ..header
    };
    Ok(ChunkResult {
        rvf: encode_rvf(&core_header, &out.frames)?,
        kinematics: out.kinematics,
        skips: out.skips,
    })
}
