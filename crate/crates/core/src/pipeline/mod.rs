//! Declarative masking configuration and the executor that applies hiding,
//! then overlays, to a run of frames. Audio is handled once per video by
//! [`run_pipeline`] (or by the manager at merge time).

mod config;
mod kinematics;

pub use config::{
    all_capabilities, config_schema, deep_merge, validate_config, validate_config_str, ExportFlags, MaskingConfig,
    OverlayKind, OverlaySpec, Preset, PresetStore,
};
pub use kinematics::{
    export_kinematics, import_kinematics_json, KinematicsDocument, KinematicsFormat, KinematicsFrame,
    KinematicsPerson, VideoMeta, CSV_HEADER,
};

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{rasterize_region, DetectionError, DetectionTimeline, PersonDetection};
use crate::hiding::{apply_stateless, inpaint_median, HidingError, HidingStrategy, Scope};
use crate::mask::Mask;
use crate::media::{AudioClip, FrameBuffer, MediaError, VideoHeader};
use crate::overlay::{
    compose_holistic, render_face_mesh, render_skeleton, default_pose_topology, HolisticTopologies, OverlayError,
};
use crate::voice::{apply_voice_strategy, VoiceError, VoiceReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config at {path}: {message}")]
    Config { path: String, message: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient temporal context: {0}")]
    Planner(String),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Hiding(#[from] HidingError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Voice(#[from] VoiceError),
    #[error(transparent)]
    Media(#[from] MediaError),
}

/// An overlay that could not be drawn for one person in one frame because
/// the landmark block it needs is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub frame: u64,
    pub person_id: String,
    pub overlay: OverlayKind,
    pub missing: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutput {
    /// Processed frames of the core range, in order.
    pub frames: Vec<FrameBuffer>,
    pub kinematics: Vec<KinematicsFrame>,
    pub skips: Vec<SkipRecord>,
}

/// Scope mask for one frame: the union of person regions, its complement,
/// or everything.
pub fn scope_mask(
    persons: &[&PersonDetection],
    width: u32,
    height: u32,
    scope: Scope,
) -> Result<Mask, PipelineError> {
    if scope == Scope::Both {
        return Ok(Mask::full(width, height));
    }
    let mut union = Mask::empty(width, height);
    for p in persons {
        union.union_with(&rasterize_region(p, width, height)?);
    }
    Ok(match scope {
        Scope::Persons => union,
        _ => !&union,
    })
}

fn persons_above(det: &DetectionTimeline, index: u64, threshold: f64) -> Vec<&PersonDetection> {
    det.persons_at(index).iter().filter(|p| p.confidence >= threshold).collect()
}

/// Processes the `core` range of a video given `frames`, a consecutive run
/// of frames (by global index) that contains the core plus whatever
/// temporal context the hiding kernel needs. `total_frames` is the length
/// of the whole video, so windows are clamped at true video boundaries only.
pub fn process_segment(
    frames: &[FrameBuffer],
    core: Range<u64>,
    total_frames: u64,
    detections: &DetectionTimeline,
    config: &MaskingConfig,
) -> Result<SegmentOutput, PipelineError> {
    let first = frames
        .first()
        .ok_or_else(|| PipelineError::Parameter("segment has no frames".into()))?;
    let start = first.index();
    let input = start..start + frames.len() as u64;
    if let Some((i, f)) = frames.iter().enumerate().find(|(i, f)| f.index() != start + *i as u64) {
        return Err(PipelineError::Parameter(format!(
            "segment frames not consecutive: position {i} has index {}",
            f.index()
        )));
    }
    if core.start >= core.end || core.start < input.start || core.end > input.end || core.end > total_frames {
        return Err(PipelineError::Parameter(format!(
            "core {core:?} not inside input {input:?} of a {total_frames}-frame video"
        )));
    }
    let (w, h) = (first.width(), first.height());
    if let Some(f) = frames.iter().find(|f| f.width() != w || f.height() != h) {
        return Err(PipelineError::Parameter(format!("frame {} has different dimensions", f.index())));
    }
    if detections.width != w || detections.height != h {
        return Err(PipelineError::Parameter(format!(
            "detections are for {}x{} but video is {w}x{h}",
            detections.width, detections.height
        )));
    }
    let hiding = &config.hiding;
    let threshold = config.confidence_threshold;
    let local = |g: u64| (g - input.start) as usize;

    let hidden: Vec<FrameBuffer> = match hiding.strategy {
        HidingStrategy::None => frames[local(core.start)..local(core.end)].to_vec(),
        HidingStrategy::InpaintMedian => {
            let r = hiding.temporal_radius() as i64;
            let last = total_frames as i64 - 1;
            // every frame any window touches, clamped at the video edges
            let lo = (core.start as i64 - r).max(0) as u64;
            let hi = ((core.end as i64 - 1 + r).min(last) + 1) as u64;
            if lo < input.start || hi > input.end {
                return Err(PipelineError::Planner(format!(
                    "core {core:?} with window {} needs frames {lo}..{hi}, input has {input:?}",
                    hiding.median_window
                )));
            }
            let masks: Vec<Mask> = (lo..hi)
                .into_par_iter()
                .map(|g| scope_mask(&persons_above(detections, g, threshold), w, h, hiding.scope))
                .collect::<Result<_, _>>()?;
            core.clone()
                .into_par_iter()
                .map(|g| {
                    let idx: Vec<u64> = (-r..=r).map(|d| (g as i64 + d).clamp(0, last) as u64).collect();
                    let win_frames: Vec<&FrameBuffer> = idx.iter().map(|&k| &frames[local(k)]).collect();
                    let win_masks: Vec<&Mask> = idx.iter().map(|&k| &masks[(k - lo) as usize]).collect();
                    inpaint_median(&win_frames, &win_masks, hiding.median_window)
                })
                .collect::<Result<_, _>>()?
        }
        _ => core
            .clone()
            .into_par_iter()
            .map(|g| {
                let mask = scope_mask(&persons_above(detections, g, threshold), w, h, hiding.scope)?;
                Ok(apply_stateless(&frames[local(g)], &mask, hiding)?)
            })
            .collect::<Result<_, PipelineError>>()?,
    };

    let want_kinematics = config.exports.any();
    let topologies = HolisticTopologies::default();
    let per_frame: Vec<(FrameBuffer, Vec<SkipRecord>, Option<KinematicsFrame>)> = hidden
        .into_par_iter()
        .map(|mut frame| {
            let g = frame.index();
            let persons = persons_above(detections, g, threshold);
            let mut skips = Vec::new();
            for spec in &config.overlays {
                for p in &persons {
                    let skip = |missing: &str| SkipRecord {
                        frame: g,
                        person_id: p.id.clone(),
                        overlay: spec.kind,
                        missing: missing.to_string(),
                    };
                    let Some(lm) = &p.landmarks else {
                        skips.push(skip(match spec.kind {
                            OverlayKind::Skeleton => "pose",
                            OverlayKind::FaceMesh => "face",
                            OverlayKind::Holistic => "landmarks",
                        }));
                        continue;
                    };
                    match spec.kind {
                        OverlayKind::Skeleton if lm.pose.is_none() => skips.push(skip("pose")),
                        OverlayKind::Skeleton => render_skeleton(&mut frame, lm, default_pose_topology(), &spec.style)?,
                        OverlayKind::FaceMesh if lm.face.is_none() => skips.push(skip("face")),
                        OverlayKind::FaceMesh => render_face_mesh(&mut frame, lm, None, &spec.style)?,
                        OverlayKind::Holistic => compose_holistic(&mut frame, lm, &topologies, &spec.style)?,
                    }
                }
            }
            let kin = want_kinematics
                .then(|| {
                    let persons: Vec<KinematicsPerson> = persons
                        .iter()
                        .filter_map(|p| {
                            p.landmarks.as_ref().map(|lm| KinematicsPerson {
                                id: p.id.clone(),
                                landmarks: lm.clone(),
                            })
                        })
                        .collect();
                    (!persons.is_empty()).then_some(KinematicsFrame { index: g, persons })
                })
                .flatten();
            Ok((frame, skips, kin))
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut out = SegmentOutput {
        frames: Vec::with_capacity(per_frame.len()),
        kinematics: Vec::new(),
        skips: Vec::new(),
    };
    for (frame, skips, kin) in per_frame {
        out.frames.push(frame);
        out.skips.extend(skips);
        out.kinematics.extend(kin);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub frames: Vec<FrameBuffer>,
    pub audio: Option<AudioClip>,
    pub kinematics: Option<KinematicsDocument>,
    pub skips: Vec<SkipRecord>,
    pub voice: VoiceReport,
}

/// Whole-video single pass: every frame is core, then the voice strategy
/// runs over the full audio track.
pub fn run_pipeline(
    header: &VideoHeader,
    frames: &[FrameBuffer],
    audio: Option<&AudioClip>,
    detections: &DetectionTimeline,
    config: &MaskingConfig,
) -> Result<PipelineRun, PipelineError> {
    let n = frames.len() as u64;
    let seg = if n == 0 {
        SegmentOutput {
            frames: Vec::new(),
            kinematics: Vec::new(),
            skips: Vec::new(),
        }
    } else {
        process_segment(frames, 0..n, n, detections, config)?
    };
    let (audio, voice) = apply_voice_strategy(audio, &config.voice)?;
    let kinematics = config.exports.any().then_some(KinematicsDocument {
        video: VideoMeta {
            width: header.width,
            height: header.height,
            fps: header.fps,
            frame_count: n,
            source: None,
        },
        frames: seg.kinematics,
    });
    Ok(PipelineRun {
        frames: seg.frames,
        audio,
        kinematics,
        skips: seg.skips,
        voice,
    })
}
