//! Per-frame person regions and landmarks, ingested from a JSON document,
//! plus a background-subtraction detector for synthetic footage.
//!
//! Document shape:
//!
//! ```json
//! { "width": 64, "height": 48, "fps": [25, 1],
//!   "frames": [ { "index": 0, "persons": [
//!       { "id": "p0", "bbox": [x, y, w, h], "confidence": 0.9,
//!         "rle": [[offset, len], ...], "landmarks": { "pose": [...] } } ] } ] }
//! ```
//!
//! `rle` runs are offsets into the bbox in row-major bbox coordinates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::Mask;
use crate::media::{FrameBuffer, Rational};
use crate::overlay::LandmarkFrame;

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("detections document invalid at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("region format error: {0}")]
    Format(String),
}

/// Pixel box `(x, y, w, h)`; may extend past the frame, in which case it is
/// clamped when rasterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: i64, y: i64, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// Intersection with a `width` x `height` frame as half-open pixel
    /// ranges, or `None` if empty.
    pub fn clamped(&self, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
        let x0 = self.x.clamp(0, i64::from(width));
        let y0 = self.y.clamp(0, i64::from(height));
        let x1 = (self.x + i64::from(self.w)).clamp(0, i64::from(width));
        let y1 = (self.y + i64::from(self.h)).clamp(0, i64::from(height));
        (x1 > x0 && y1 > y0).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }
}

impl TryFrom<[i64; 4]> for BBox {
    type Error = String;

    fn try_from([x, y, w, h]: [i64; 4]) -> Result<Self, String> {
        let w = u32::try_from(w).map_err(|_| format!("bbox width {w} must be in 0..=u32::MAX"))?;
        let h = u32::try_from(h).map_err(|_| format!("bbox height {h} must be in 0..=u32::MAX"))?;
        Ok(Self { x, y, w, h })
    }
}

impl From<BBox> for [i64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, i64::from(b.w), i64::from(b.h)]
    }
}

/// One foreground run inside a bbox, `[offset, len]` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct Run {
    pub offset: u64,
    pub len: u64,
}

impl From<[u64; 2]> for Run {
    fn from([offset, len]: [u64; 2]) -> Self {
        Self { offset, len }
    }
}

impl From<Run> for [u64; 2] {
    fn from(r: Run) -> Self {
        [r.offset, r.len]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonDetection {
    pub id: String,
    pub bbox: BBox,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rle: Option<Vec<Run>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<LandmarkFrame>,
}

impl PersonDetection {
    pub fn boxed(id: impl Into<String>, bbox: BBox, confidence: f64) -> Self {
        Self {
            id: id.into(),
            bbox,
            confidence,
            rle: None,
            landmarks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub index: u64,
    #[serde(default)]
    pub persons: Vec<PersonDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTimeline {
    pub width: u32,
    pub height: u32,
    pub fps: Rational,
    #[serde(default)]
    pub frames: Vec<FrameDetections>,
}

impl DetectionTimeline {
    pub fn new(width: u32, height: u32, fps: Rational) -> Self {
        Self {
            width,
            height,
            fps,
            frames: Vec::new(),
        }
    }

    /// Detections for frame `index`, empty when the frame is not listed.
    pub fn persons_at(&self, index: u64) -> &[PersonDetection] {
        self.frames
            .binary_search_by_key(&index, |f| f.index)
            .map(|i| self.frames[i].persons.as_slice())
            .unwrap_or(&[])
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timeline serializes")
    }

    fn validate(&self) -> Result<(), DetectionError> {
        let err = |path: String, message: String| Err(DetectionError::Schema { path, message });
        if self.width == 0 {
            return err("width".into(), "must be positive".into());
        }
        if self.height == 0 {
            return err("height".into(), "must be positive".into());
        }
        let mut prev: Option<u64> = None;
        for (fi, frame) in self.frames.iter().enumerate() {
            if prev.is_some_and(|p| frame.index <= p) {
                return err(
                    format!("frames[{fi}].index"),
                    format!("{} is not strictly increasing", frame.index),
                );
            }
            prev = Some(frame.index);
            for (pi, p) in frame.persons.iter().enumerate() {
                let base = format!("frames[{fi}].persons[{pi}]");
                if !(0.0..=1.0).contains(&p.confidence) {
                    return err(
                        format!("{base}.confidence"),
                        format!("{} outside [0, 1]", p.confidence),
                    );
                }
                if let Some(runs) = &p.rle {
                    for (ri, r) in runs.iter().enumerate() {
                        if r.offset.saturating_add(r.len) > p.bbox.area() {
                            return err(
                                format!("{base}.rle[{ri}]"),
                                format!("run {}+{} exceeds bbox area {}", r.offset, r.len, p.bbox.area()),
                            );
                        }
                    }
                }
                if let Some(lm) = &p.landmarks {
                    if let Err((block, message)) = lm.validate() {
                        return err(format!("{base}.landmarks.{block}"), message);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a detections document. Unknown keys are ignored.
pub fn parse_detections(document: &str) -> Result<DetectionTimeline, DetectionError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let timeline: DetectionTimeline =
        serde_path_to_error::deserialize(de).map_err(|e| DetectionError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    timeline.validate()?;
    Ok(timeline)
}

/// Keeps detections with `confidence >= threshold`; frame entries stay.
pub fn filter_by_confidence(
    timeline: &DetectionTimeline,
    threshold: f64,
) -> Result<DetectionTimeline, DetectionError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(DetectionError::Parameter(format!(
            "confidence threshold {threshold} outside [0, 1]"
        )));
    }
    let frames = timeline
        .frames
        .iter()
        .map(|f| FrameDetections {
            index: f.index,
            persons: f
                .persons
                .iter()
                .filter(|p| p.confidence >= threshold)
                .cloned()
                .collect(),
        })
        .collect();
    Ok(DetectionTimeline {
        frames,
        ..timeline.clone()
    })
}

/// Expands a detection into a frame-sized mask: the RLE region when
/// present, otherwise the whole (clamped) bbox.
pub fn rasterize_region(det: &PersonDetection, width: u32, height: u32) -> Result<Mask, DetectionError> {
    if width == 0 || height == 0 {
        return Err(DetectionError::Parameter(format!(
            "frame dimensions {width}x{height} must be positive"
        )));
    }
    let mut mask = Mask::empty(width, height);
    let b = det.bbox;
    match &det.rle {
        None => {
            if let Some((x0, y0, x1, y1)) = b.clamped(width, height) {
                for y in y0..y1 {
                    for x in x0..x1 {
                        mask.set(x, y, true);
                    }
                }
            }
        }
        Some(runs) => {
            let area = b.area();
            for r in runs {
                let end = r.offset.checked_add(r.len).filter(|&e| e <= area).ok_or_else(|| {
                    DetectionError::Format(format!(
                        "run {}+{} extends past the {}x{} bbox of {}",
                        r.offset, r.len, b.w, b.h, det.id
                    ))
                })?;
                for k in r.offset..end {
                    let x = b.x + (k % u64::from(b.w)) as i64;
                    let y = b.y + (k / u64::from(b.w)) as i64;
                    if x >= 0 && y >= 0 && x < i64::from(width) && y < i64::from(height) {
                        mask.set(x as u32, y as u32, true);
                    }
                }
            }
        }
    }
    Ok(mask)
}

/// Background subtraction: pixels whose largest per-channel absolute
/// difference exceeds `tau` are foreground; 4-connected components with at
/// least `min_area` pixels become detections (confidence 1, RLE region).
/// Components are reported in raster order of their first pixel.
pub fn bgsub_detect(
    reference: &FrameBuffer,
    frame: &FrameBuffer,
    tau: u8,
    min_area: usize,
) -> Result<Vec<PersonDetection>, DetectionError> {
    let (w, h) = (frame.width(), frame.height());
    if reference.width() != w || reference.height() != h {
        return Err(DetectionError::Parameter(format!(
            "reference {}x{} differs from frame {w}x{h}",
            reference.width(),
            reference.height()
        )));
    }
    let fg: Vec<bool> = reference
        .pixels()
        .chunks_exact(3)
        .zip(frame.pixels().chunks_exact(3))
        .map(|(a, b)| a.iter().zip(b).map(|(&p, &q)| p.abs_diff(q)).max().unwrap_or(0) > tau)
        .collect();

    let (wu, hu) = (w as usize, h as usize);
    let mut seen = vec![false; fg.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..fg.len() {
        if !fg[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = (i % wu, i / wu);
            let mut visit = |j: usize| {
                if fg[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < wu {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - wu);
            }
            if y + 1 < hu {
                visit(i + wu);
            }
        }
        if pixels.len() < min_area {
            continue;
        }
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for &i in &pixels {
            let (x, y) = (i % wu, i / wu);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let bw = x1 - x0 + 1;
        let mut offsets: Vec<u64> = pixels
            .iter()
            .map(|&i| ((i / wu - y0) * bw + (i % wu - x0)) as u64)
            .collect();
        offsets.sort_unstable();
        let mut runs: Vec<Run> = Vec::new();
        for off in offsets {
            match runs.last_mut() {
                Some(r) if r.offset + r.len == off => r.len += 1,
                _ => runs.push(Run { offset: off, len: 1 }),
            }
        }
        out.push(PersonDetection {
            id: format!("bg{}", out.len()),
            bbox: BBox::new(x0 as i64, y0 as i64, bw as u32, (y1 - y0 + 1) as u32),
            confidence: 1.0,
            rle: Some(runs),
            landmarks: None,
        });
    }
    Ok(out)
}
