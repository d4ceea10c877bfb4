//! Information-preserving renderers: body skeleton, hand skeletons and face
//! landmark dots drawn from normalized landmark coordinates.
//!
//! Pose indices follow the common 33-point body convention (0 nose, 11/12
//! shoulders, 13/14 elbows, 15/16 wrists, 23/24 hips, 25/26 knees, 27/28
//! ankles, 29..32 heels and foot tips). The default edge sets ship as JSON
//! under `data/` and can be replaced by any [`EdgeTopology`].

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::media::FrameBuffer;

pub const POSE_POINTS: usize = 33;
pub const FACE_POINTS: usize = 478;
pub const HAND_POINTS: usize = 21;

#[derive(Debug, Error, PartialEq)]
pub enum OverlayError {
    #[error("topology {name}: {message}")]
    Config { name: String, message: String },
    #[error("landmark block {0} is absent")]
    MissingBlock(&'static str),
}

/// A single landmark; `x`, `y` are normalized image coordinates, `z` is
/// unitless depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub visibility: f64,
}

impl Landmark {
    pub fn new(x: f64, y: f64, z: f64, visibility: f64) -> Self {
        Self { x, y, z, visibility }
    }

    pub fn in_frame(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

impl TryFrom<[f64; 4]> for Landmark {
    type Error = String;

    fn try_from([x, y, z, v]: [f64; 4]) -> Result<Self, String> {
        if ![x, y, z, v].iter().all(|c| c.is_finite()) {
            return Err("landmark components must be finite".into());
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("visibility {v} outside [0, 1]"));
        }
        Ok(Self::new(x, y, z, v))
    }
}

impl From<Landmark> for [f64; 4] {
    fn from(l: Landmark) -> Self {
        [l.x, l.y, l.z, l.visibility]
    }
}

/// Landmark blocks for one person in one frame. Each block is optional but
/// has a fixed size when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Vec<Landmark>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<Vec<Landmark>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_hand: Option<Vec<Landmark>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_hand: Option<Vec<Landmark>>,
}

impl LandmarkFrame {
    /// Named blocks that are present, in export order.
    pub fn blocks(&self) -> impl Iterator<Item = (&'static str, &[Landmark])> {
        [
            ("pose", self.pose.as_deref()),
            ("face", self.face.as_deref()),
            ("left_hand", self.left_hand.as_deref()),
            ("right_hand", self.right_hand.as_deref()),
        ]
        .into_iter()
        .filter_map(|(name, b)| b.map(|b| (name, b)))
    }

    /// Checks block sizes; on failure returns the offending key and a message.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (name, block) in self.blocks() {
            let want = block_size(name).expect("known block");
            if block.len() != want {
                return Err((name, format!("expected {want} points, found {}", block.len())));
            }
        }
        Ok(())
    }
}

pub fn block_size(name: &str) -> Option<usize> {
    match name {
        "pose" => Some(POSE_POINTS),
        "face" => Some(FACE_POINTS),
        "left_hand" | "right_hand" => Some(HAND_POINTS),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeTopology {
    pub name: String,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeTopology {
    pub fn validate(&self, block_len: usize) -> Result<(), OverlayError> {
        for &(a, b) in &self.edges {
            let message = if a == b {
                format!("self-edge ({a}, {b})")
            } else if a >= block_len || b >= block_len {
                format!("edge ({a}, {b}) outside a {block_len}-point block")
            } else {
                continue;
            };
            return Err(OverlayError::Config {
                name: self.name.clone(),
                message,
            });
        }
        Ok(())
    }
}

static POSE_TOPOLOGY: Lazy<EdgeTopology> = Lazy::new(|| {
    serde_json::from_str(include_str!("../data/pose_topology.json")).expect("bundled topology")
});
static HAND_TOPOLOGY: Lazy<EdgeTopology> = Lazy::new(|| {
    serde_json::from_str(include_str!("../data/hand_topology.json")).expect("bundled topology")
});

pub fn default_pose_topology() -> &'static EdgeTopology {
    &POSE_TOPOLOGY
}

pub fn default_hand_topology() -> &'static EdgeTopology {
    &HAND_TOPOLOGY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlayStyle {
    pub color: [u8; 3],
    pub joint_color: [u8; 3],
    pub thickness: u32,
    pub joint_radius: u32,
    pub min_visibility: f64,
}

impl Default for OverlayStyle {
    fn default() -> Self {
        Self {
            color: [0, 255, 0],
            joint_color: [255, 0, 0],
            thickness: 2,
            joint_radius: 2,
            min_visibility: 0.5,
        }
    }
}

/// Pixel coordinate of a landmark, or `None` when it lies outside the
/// normalized unit square.
pub fn project_point(pt: &Landmark, width: u32, height: u32) -> Option<(u32, u32)> {
    if !pt.in_frame() || width == 0 || height == 0 {
        return None;
    }
    let px = ((pt.x * f64::from(width)).floor() as u32).min(width - 1);
    let py = ((pt.y * f64::from(height)).floor() as u32).min(height - 1);
    Some((px, py))
}

struct Painter<'a> {
    frame: &'a mut FrameBuffer,
}

impl Painter<'_> {
    fn plot(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x >= 0 && y >= 0 && x < i64::from(self.frame.width()) && y < i64::from(self.frame.height()) {
            self.frame.set(x as u32, y as u32, color);
        }
    }

    /// Square brush of side `size` anchored so that size 1 is one pixel.
    fn brush(&mut self, x: i64, y: i64, size: u32, color: [u8; 3]) {
        let size = i64::from(size.max(1));
        let lo = -(size - 1) / 2;
        let hi = size / 2;
        for dy in lo..=hi {
            for dx in lo..=hi {
                self.plot(x + dx, y + dy, color);
            }
        }
    }

    fn line(&mut self, (x0, y0): (u32, u32), (x1, y1): (u32, u32), thickness: u32, color: [u8; 3]) {
        let (mut x, mut y) = (i64::from(x0), i64::from(y0));
        let (x1, y1) = (i64::from(x1), i64::from(y1));
        let dx = (x1 - x).abs();
        let dy = -(y1 - y).abs();
        let sx = if x < x1 { 1 } else { -1 };
        let sy = if y < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.brush(x, y, thickness, color);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn disc(&mut self, (cx, cy): (u32, u32), radius: u32, color: [u8; 3]) {
        let r = i64::from(radius);
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    self.plot(i64::from(cx) + dx, i64::from(cy) + dy, color);
                }
            }
        }
    }
}

fn visible_point(pt: &Landmark, style: &OverlayStyle, w: u32, h: u32) -> Option<(u32, u32)> {
    if pt.visibility < style.min_visibility {
        return None;
    }
    project_point(pt, w, h)
}

fn draw_graph(frame: &mut FrameBuffer, block: &[Landmark], topology: &EdgeTopology, style: &OverlayStyle) {
    let (w, h) = (frame.width(), frame.height());
    let points: Vec<_> = block.iter().map(|p| visible_point(p, style, w, h)).collect();
    let mut painter = Painter { frame };
    for &(a, b) in &topology.edges {
        if let (Some(pa), Some(pb)) = (points[a], points[b]) {
            painter.line(pa, pb, style.thickness, style.color);
        }
    }
    for p in points.into_iter().flatten() {
        painter.disc(p, style.joint_radius, style.joint_color);
    }
}

/// Draws a skeleton for an arbitrary block with the given edge set.
pub fn render_block_skeleton(
    frame: &mut FrameBuffer,
    block: &[Landmark],
    topology: &EdgeTopology,
    style: &OverlayStyle,
) -> Result<(), OverlayError> {
    topology.validate(block.len())?;
    draw_graph(frame, block, topology, style);
    Ok(())
}

/// Body skeleton from the pose block: edges whose endpoints are both
/// visible and in frame, plus a disc per visible joint.
pub fn render_skeleton(
    frame: &mut FrameBuffer,
    landmarks: &LandmarkFrame,
    topology: &EdgeTopology,
    style: &OverlayStyle,
) -> Result<(), OverlayError> {
    let pose = landmarks.pose.as_deref().ok_or(OverlayError::MissingBlock("pose"))?;
    render_block_skeleton(frame, pose, topology, style)
}

/// Face landmarks as single-pixel dots, or as a graph when a topology is
/// supplied.
pub fn render_face_mesh(
    frame: &mut FrameBuffer,
    landmarks: &LandmarkFrame,
    topology: Option<&EdgeTopology>,
    style: &OverlayStyle,
) -> Result<(), OverlayError> {
    let face = landmarks.face.as_deref().ok_or(OverlayError::MissingBlock("face"))?;
    if let Some(t) = topology {
        t.validate(FACE_POINTS)?;
        return render_block_skeleton(frame, face, t, style);
    }
    let (w, h) = (frame.width(), frame.height());
    for p in face {
        if let Some((x, y)) = visible_point(p, style, w, h) {
            frame.set(x, y, style.color);
        }
    }
    Ok(())
}

/// Edge sets used by [`compose_holistic`].
#[derive(Debug, Clone, PartialEq)]
pub struct HolisticTopologies {
    pub pose: EdgeTopology,
    pub hand: EdgeTopology,
    pub face: Option<EdgeTopology>,
}

impl Default for HolisticTopologies {
    fn default() -> Self {
        Self {
            pose: default_pose_topology().clone(),
            hand: default_hand_topology().clone(),
            face: None,
        }
    }
}

/// Pose skeleton, then left and right hands, then the face, skipping absent
/// blocks.
pub fn compose_holistic(
    frame: &mut FrameBuffer,
    landmarks: &LandmarkFrame,
    topologies: &HolisticTopologies,
    style: &OverlayStyle,
) -> Result<(), OverlayError> {
    topologies.pose.validate(POSE_POINTS)?;
    topologies.hand.validate(HAND_POINTS)?;
    if let Some(f) = &topologies.face {
        f.validate(FACE_POINTS)?;
    }
    if landmarks.pose.is_some() {
        render_skeleton(frame, landmarks, &topologies.pose, style)?;
    }
    for hand in [&landmarks.left_hand, &landmarks.right_hand].into_iter().flatten() {
        render_block_skeleton(frame, hand, &topologies.hand, style)?;
    }
    if landmarks.face.is_some() {
        render_face_mesh(frame, landmarks, topologies.face.as_ref(), style)?;
    }
    Ok(())
}
