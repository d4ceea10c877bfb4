//! Canny edge detection on luma, used by the contour kernel.

use super::blur::gaussian_smooth;
use super::{check_dims, CannyParams, HidingError};
use crate::mask::Mask;
use crate::media::FrameBuffer;

/// Integer luma, `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn luma(frame: &FrameBuffer) -> Vec<f64> {
    frame
        .pixels()
        .chunks_exact(3)
        .map(|p| (0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])).round())
        .collect()
}

/// Edge map of the frame: Gaussian smoothing, 3x3 Sobel, non-maximum
/// suppression over four directions, then hysteresis (strong >= high, weak
/// >= low, weak pixels kept when 8-connected to a strong one).
pub fn canny_edges(frame: &FrameBuffer, params: &CannyParams) -> Result<Vec<bool>, HidingError> {
    params.validate()?;
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let smooth = gaussian_smooth(&luma(frame), w, h, params.sigma);
    let at = |x: i64, y: i64| {
        let xx = x.clamp(0, w as i64 - 1) as usize;
        let yy = y.clamp(0, h as i64 - 1) as usize;
        smooth[yy * w + xx]
    };

    let mut mag = vec![0.0f64; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            // angle folded into [0, 180) and binned at 22.5 degree boundaries
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            dir[i] = if !(22.5..157.5).contains(&angle) {
                0
            } else if angle < 67.5 {
                1
            } else if angle < 112.5 {
                2
            } else {
                3
            };
        }
    }

    let m = |x: i64, y: i64| {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut thin = vec![0.0f64; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v == 0.0 {
                continue;
            }
            let (dx, dy) = match dir[i] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            // strict against the backward neighbour, non-strict forward, so a
            // symmetric plateau of two keeps exactly one pixel
            if v > m(x - dx, y - dy) && v >= m(x + dx, y + dy) {
                thin[i] = v;
            }
        }
    }

    let mut edge = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &v) in thin.iter().enumerate() {
        if v >= params.high_threshold {
            edge[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edge[j] && thin[j] >= params.low_threshold {
                    edge[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    Ok(edge)
}

/// Inside the mask: white where an edge was found, black elsewhere.
pub fn apply_contours(frame: &FrameBuffer, mask: &Mask, params: &CannyParams) -> Result<FrameBuffer, HidingError> {
    params.validate()?;
    check_dims(frame, mask)?;
    let mut out = frame.clone();
    if mask.is_empty() {
        return Ok(out);
    }
    let edges = canny_edges(frame, params)?;
    let px = out.pixels_mut();
    for (i, (&m, &e)) in mask.bits().iter().zip(&edges).enumerate() {
        if m {
            px[i * 3..i * 3 + 3].fill(if e { 255 } else { 0 });
        }
    }
    Ok(out)
}
