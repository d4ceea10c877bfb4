use super::{check_dims, check_median_window, HidingError};
use crate::mask::Mask;
use crate::media::FrameBuffer;

/// Temporal-median background fill for the center frame of `frames`.
///
/// Each pixel masked in the center frame takes, per channel, the median of
/// its values across window frames where it is not masked (lower median for
/// even counts). Pixels masked in every frame of the window become black.
pub fn inpaint_median(frames: &[&FrameBuffer], masks: &[&Mask], median_window: usize) -> Result<FrameBuffer, HidingError> {
    check_median_window(median_window)?;
    if frames.len() != median_window || masks.len() != median_window {
        return Err(HidingError::Parameter(format!(
            "window of {} frames / {} masks, expected {median_window}",
            frames.len(),
            masks.len()
        )));
    }
    let center = median_window / 2;
    let base = frames[center];
    for (f, m) in frames.iter().zip(masks) {
        if f.width() != base.width() || f.height() != base.height() {
            return Err(HidingError::Parameter("window frames differ in size".into()));
        }
        check_dims(f, m)?;
    }
    let mut out = base.clone();
    let mut samples: [Vec<u8>; 3] = Default::default();
    for (i, _) in masks[center].bits().iter().enumerate().filter(|(_, &m)| m) {
        for s in &mut samples {
            s.clear();
        }
        for (f, m) in frames.iter().zip(masks) {
            if !m.bits()[i] {
                let p = &f.pixels()[i * 3..i * 3 + 3];
                for c in 0..3 {
                    samples[c].push(p[c]);
                }
            }
        }
        let value = if samples[0].is_empty() {
            [0, 0, 0]
        } else {
            let mut v = [0u8; 3];
            for c in 0..3 {
                samples[c].sort_unstable();
                v[c] = samples[c][(samples[c].len() - 1) / 2];
            }
            v
        };
        out.pixels_mut()[i * 3..i * 3 + 3].copy_from_slice(&value);
    }
    Ok(out)
}
