use super::{check_blur_level, check_dims, gated_copy, HidingError};
use crate::mask::Mask;
use crate::media::FrameBuffer;

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable convolution of a single-channel plane, clamp-to-edge borders.
fn convolve_plane(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wt) in kernel.iter().enumerate() {
                let xx = (x as i64 + k as i64 - r).clamp(0, w as i64 - 1) as usize;
                acc += wt * row[xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wt) in kernel.iter().enumerate() {
                let yy = (y as i64 + k as i64 - r).clamp(0, h as i64 - 1) as usize;
                acc += wt * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Gaussian-smoothed single-channel plane.
pub fn gaussian_smooth(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    convolve_plane(plane, width, height, &gaussian_kernel(sigma))
}

/// Gaussian blur with `sigma = blur_level`, computed over the whole frame
/// and written only at masked pixels.
pub fn apply_blur(frame: &FrameBuffer, mask: &Mask, blur_level: u32) -> Result<FrameBuffer, HidingError> {
    check_blur_level(blur_level)?;
    check_dims(frame, mask)?;
    let mut out = frame.clone();
    if mask.is_empty() {
        return Ok(out);
    }
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let kernel = gaussian_kernel(f64::from(blur_level));
    let mut blurred = vec![0u8; w * h * 3];
    for c in 0..3 {
        let plane: Vec<f64> = frame.pixels()[c..].iter().step_by(3).map(|&v| f64::from(v)).collect();
        let smooth = convolve_plane(&plane, w, h, &kernel);
        for (i, v) in smooth.into_iter().enumerate() {
            blurred[i * 3 + c] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    gated_copy(&mut out, &blurred, mask);
    Ok(out)
}
