//! Hiding kernels. Every kernel reads the original frame and writes only the
//! pixels selected by the mask; everything else is copied through untouched.

mod blur;
mod canny;
mod inpaint;

pub use blur::{apply_blur, gaussian_kernel, gaussian_smooth};
pub use canny::{apply_contours, canny_edges, luma};
pub use inpaint::inpaint_median;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::Mask;
use crate::media::FrameBuffer;

#[derive(Debug, Error, PartialEq)]
pub enum HidingError {
    #[error("invalid hiding parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HidingStrategy {
    None,
    Blackout,
    Blur,
    Pixelate,
    Contours,
    InpaintMedian,
}

impl HidingStrategy {
    pub const ALL: [HidingStrategy; 6] = [
        Self::None,
        Self::Blackout,
        Self::Blur,
        Self::Pixelate,
        Self::Contours,
        Self::InpaintMedian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Blackout => "blackout",
            Self::Blur => "blur",
            Self::Pixelate => "pixelate",
            Self::Contours => "contours",
            Self::InpaintMedian => "inpaint_median",
        }
    }

    /// Whether outputs depend on neighbouring frames.
    pub fn is_temporal(self) -> bool {
        self == Self::InpaintMedian
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Persons,
    Background,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CannyParams {
    pub sigma: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            low_threshold: 20.0,
            high_threshold: 60.0,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<(), HidingError> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(HidingError::Parameter(format!("canny sigma {} must be positive", self.sigma)));
        }
        if !(self.low_threshold >= 0.0 && self.low_threshold < self.high_threshold) {
            return Err(HidingError::Parameter(format!(
                "canny thresholds need 0 <= low < high, got ({}, {})",
                self.low_threshold, self.high_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HidingParams {
    pub strategy: HidingStrategy,
    pub blur_level: u32,
    pub block_size: u32,
    pub canny: CannyParams,
    pub median_window: usize,
    pub scope: Scope,
}

impl Default for HidingParams {
    fn default() -> Self {
        Self {
            strategy: HidingStrategy::None,
            blur_level: 5,
            block_size: 16,
            canny: CannyParams::default(),
            median_window: 5,
            scope: Scope::Persons,
        }
    }
}

impl HidingParams {
    pub fn validate(&self) -> Result<(), HidingError> {
        check_blur_level(self.blur_level)?;
        if self.block_size < 1 {
            return Err(HidingError::Parameter("block_size must be >= 1".into()));
        }
        self.canny.validate()?;
        check_median_window(self.median_window)?;
        Ok(())
    }

    /// Frames of context needed on each side of an output frame.
    pub fn temporal_radius(&self) -> usize {
        if self.strategy.is_temporal() {
            (self.median_window - 1) / 2
        } else {
            0
        }
    }
}

pub(crate) fn check_blur_level(level: u32) -> Result<(), HidingError> {
    if !(1..=10).contains(&level) {
        return Err(HidingError::Parameter(format!("blur level {level} outside 1..=10")));
    }
    Ok(())
}

pub(crate) fn check_median_window(w: usize) -> Result<(), HidingError> {
    if w < 3 || w.is_multiple_of(2) {
        return Err(HidingError::Parameter(format!(
            "median window {w} must be odd and >= 3"
        )));
    }
    Ok(())
}

pub(crate) fn check_dims(frame: &FrameBuffer, mask: &Mask) -> Result<(), HidingError> {
    if !mask.same_dims(frame.width(), frame.height()) {
        return Err(HidingError::Parameter(format!(
            "mask {}x{} does not match frame {}x{}",
            mask.width(),
            mask.height(),
            frame.width(),
            frame.height()
        )));
    }
    Ok(())
}

/// Copies `replacement` into `out` at every masked pixel.
pub(crate) fn gated_copy(out: &mut FrameBuffer, replacement: &[u8], mask: &Mask) {
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &m)| m) {
        out.pixels_mut()[i * 3..i * 3 + 3].copy_from_slice(&replacement[i * 3..i * 3 + 3]);
    }
}

pub fn apply_blackout(frame: &FrameBuffer, mask: &Mask) -> Result<FrameBuffer, HidingError> {
    check_dims(frame, mask)?;
    let mut out = frame.clone();
    let px = out.pixels_mut();
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, &m)| m) {
        px[i * 3..i * 3 + 3].fill(0);
    }
    Ok(out)
}

/// Replaces masked pixels with the mean of their `block_size` cell (grid
/// anchored at the origin, cells clipped at the frame edge), rounding
/// halves up.
pub fn apply_pixelate(frame: &FrameBuffer, mask: &Mask, block_size: u32) -> Result<FrameBuffer, HidingError> {
    check_dims(frame, mask)?;
    if block_size < 1 {
        return Err(HidingError::Parameter("block_size must be >= 1".into()));
    }
    let (w, h) = (frame.width(), frame.height());
    let mut out = frame.clone();
    if mask.is_empty() {
        return Ok(out);
    }
    for cy in (0..h).step_by(block_size as usize) {
        for cx in (0..w).step_by(block_size as usize) {
            let (x1, y1) = ((cx + block_size).min(w), (cy + block_size).min(h));
            let any = (cy..y1).any(|y| (cx..x1).any(|x| mask.get(x, y)));
            if !any {
                continue;
            }
            let mut sum = [0u64; 3];
            for y in cy..y1 {
                for x in cx..x1 {
                    let p = frame.get(x, y);
                    for c in 0..3 {
                        sum[c] += u64::from(p[c]);
                    }
                }
            }
            let n = u64::from(x1 - cx) * u64::from(y1 - cy);
            let mean = sum.map(|s| ((2 * s + n) / (2 * n)) as u8);
            for y in cy..y1 {
                for x in cx..x1 {
                    if mask.get(x, y) {
                        out.set(x, y, mean);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs a stateless kernel selected by `params`. Temporal strategies need
/// a window and go through [`inpaint_median`] instead.
pub fn apply_stateless(frame: &FrameBuffer, mask: &Mask, params: &HidingParams) -> Result<FrameBuffer, HidingError> {
    match params.strategy {
        HidingStrategy::None => {
            check_dims(frame, mask)?;
            Ok(frame.clone())
        }
        HidingStrategy::Blackout => apply_blackout(frame, mask),
        HidingStrategy::Blur => apply_blur(frame, mask, params.blur_level),
        HidingStrategy::Pixelate => apply_pixelate(frame, mask, params.block_size),
        HidingStrategy::Contours => apply_contours(frame, mask, &params.canny),
        HidingStrategy::InpaintMedian => Err(HidingError::Parameter(
            "inpaint_median needs a temporal window".into(),
        )),
    }
}
