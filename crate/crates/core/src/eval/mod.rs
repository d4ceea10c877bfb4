//! Privacy and utility metrics.

mod eer;
mod pitch;

pub use eer::{compute_eer, EerResult, ScoreSet};
pub use pitch::{pitch_correlation, track_pitch, PitchFrame, PitchTrack, PitchTrackParams};

use thiserror::Error;

use crate::mask::Mask;
use crate::media::FrameBuffer;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("invalid metric input: {0}")]
    Parameter(String),
    #[error("metric undefined: {0}")]
    Undefined(String),
}

/// Word error rate: unit-cost edit distance over whitespace tokens,
/// case-folded, divided by the reference length.
pub fn compute_wer(reference: &str, hypothesis: &str) -> Result<f64, EvalError> {
    let r = tokenize(reference);
    let h = tokenize(hypothesis);
    compute_wer_tokens(&r, &h)
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn compute_wer_tokens<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::Parameter("reference transcript is empty".into()));
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Raw (not chance-corrected) fraction of positions with equal labels.
pub fn agreement_score<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Parameter(format!("label sequences differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(EvalError::Parameter("label sequences are empty".into()));
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Fraction of mask pixels whose RGB value survived unchanged. A video with
/// no mask pixels at all leaks nothing and scores 0.
pub fn mask_leakage(original: &[FrameBuffer], masked: &[FrameBuffer], masks: &[Mask]) -> Result<f64, EvalError> {
    if original.len() != masked.len() || original.len() != masks.len() {
        return Err(EvalError::Parameter(format!(
            "frame counts differ: original {}, masked {}, masks {}",
            original.len(),
            masked.len(),
            masks.len()
        )));
    }
    let (mut total, mut unchanged) = (0u64, 0u64);
    for (i, ((o, m), mask)) in original.iter().zip(masked).zip(masks).enumerate() {
        if o.width() != m.width() || o.height() != m.height() || !mask.same_dims(o.width(), o.height()) {
            return Err(EvalError::Parameter(format!("frame {i}: dimensions differ")));
        }
        for (p, &on) in mask.bits().iter().enumerate() {
            if on {
                total += 1;
                if o.pixels()[3 * p..3 * p + 3] == m.pixels()[3 * p..3 * p + 3] {
                    unchanged += 1;
                }
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { unchanged as f64 / total as f64 })
}

/// `0.476` -> `"47.60%"`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}%", fraction * 100.0)
}

/// `0.82` -> `"82%"`, used for correlations.
pub fn format_whole_percent(fraction: f64) -> String {
    format!("{:.0}%", fraction * 100.0)
}
