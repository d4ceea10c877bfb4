use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ManagerError;

/// Frames a chunk owns in the output (`core`) and the frames it reads
/// (`input`, the core widened by the overlap and clipped to the video).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub core: Range<u64>,
    pub input: Range<u64>,
}

pub fn plan_chunks(frame_count: u64, core_size: u64, overlap: u64) -> Result<Vec<ChunkPlan>, ManagerError> {
    if core_size == 0 {
        return Err(ManagerError::Parameter("chunk core size must be >= 1".into()));
    }
    let chunks = frame_count.div_ceil(core_size);
    Ok((0..chunks)
        .map(|i| {
            let start = i * core_size;
            let end = ((i + 1) * core_size).min(frame_count);
            ChunkPlan {
                core: start..end,
                input: start.saturating_sub(overlap)..end.saturating_add(overlap).min(frame_count),
            }
        })
        .collect())
}
