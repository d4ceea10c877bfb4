use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::media::AudioClip;

pub const MIN_F0: f64 = 50.0;
pub const MAX_F0: f64 = 500.0;
const VOICING_THRESHOLD: f64 = 0.5;
/// A later lag peak is preferred over the global one only if it is not the
/// first sizable peak; this picks the fundamental rather than a multiple.
const FIRST_PEAK_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchTrackParams {
    pub window_ms: f64,
    pub hop_ms: f64,
}

impl Default for PitchTrackParams {
    fn default() -> Self {
        Self {
            window_ms: 40.0,
            hop_ms: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    /// `None` when unvoiced.
    pub f0: Option<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub hop_secs: f64,
    pub frames: Vec<PitchFrame>,
}

impl PitchTrack {
    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().filter_map(|f| f.f0)
    }
}

/// Frame-wise F0 from normalized autocorrelation with parabolic peak
/// refinement. Stereo input is downmixed.
pub fn track_pitch(clip: &AudioClip, params: &PitchTrackParams) -> Result<PitchTrack, EvalError> {
    let sr = f64::from(clip.sample_rate());
    if sr < 8000.0 {
        return Err(EvalError::Parameter(format!("sample rate {sr} below 8 kHz")));
    }
    if !(params.window_ms > 0.0 && params.hop_ms > 0.0) {
        return Err(EvalError::Parameter("window and hop must be positive".into()));
    }
    let window = (params.window_ms * sr / 1000.0).round() as usize;
    let hop = ((params.hop_ms * sr / 1000.0).round() as usize).max(1);
    let x = clip.downmix();
    let min_lag = (sr / MAX_F0).floor() as usize;
    let max_lag = ((sr / MIN_F0).ceil() as usize).min(window.saturating_sub(2));
    let mut frames = Vec::new();
    if x.len() >= window && max_lag > min_lag + 1 {
        let mut start = 0;
        while start + window <= x.len() {
            frames.push(analyze_frame(&x[start..start + window], min_lag, max_lag, sr));
            start += hop;
        }
    }
    Ok(PitchTrack {
        hop_secs: hop as f64 / sr,
        frames,
    })
}

fn normalized_autocorr(w: &[f64], lag: usize) -> f64 {
    let n = w.len() - lag;
    let (mut num, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for i in 0..n {
        num += w[i] * w[i + lag];
        e0 += w[i] * w[i];
        e1 += w[i + lag] * w[i + lag];
    }
    let den = (e0 * e1).sqrt();
    if den > 1e-12 {
        num / den
    } else {
        0.0
    }
}

fn analyze_frame(w: &[f64], min_lag: usize, max_lag: usize, sr: f64) -> PitchFrame {
    const UNVOICED: PitchFrame = PitchFrame { f0: None, confidence: 0.0 };
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let w: Vec<f64> = w.iter().map(|v| v - mean).collect();
    // one lag of margin each side for the peak test and the parabola
    let lo = min_lag.saturating_sub(1).max(1);
    let r: Vec<f64> = (lo..=max_lag + 1).map(|lag| normalized_autocorr(&w, lag)).collect();
    let at = |lag: usize| r[lag - lo];
    let peaks: Vec<usize> = (min_lag.max(lo + 1)..=max_lag)
        .filter(|&l| at(l) > at(l - 1) && at(l) >= at(l + 1))
        .collect();
    let Some(global) = peaks.iter().map(|&l| at(l)).reduce(f64::max) else {
        return UNVOICED;
    };
    let lag = *peaks
        .iter()
        .find(|&&l| at(l) >= FIRST_PEAK_FRACTION * global)
        .expect("global peak qualifies");
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-15 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let confidence = (b - 0.25 * (a - c) * shift).clamp(0.0, 1.0);
    let f0 = sr / (lag as f64 + shift);
    if confidence >= VOICING_THRESHOLD && (MIN_F0..=MAX_F0).contains(&f0) {
        PitchFrame { f0: Some(f0), confidence }
    } else {
        PitchFrame { f0: None, confidence }
    }
}

/// Pearson correlation of F0 over frames voiced in both tracks.
pub fn pitch_correlation(a: &PitchTrack, b: &PitchTrack) -> Result<f64, EvalError> {
    if (a.hop_secs - b.hop_secs).abs() > 1e-9 * a.hop_secs.abs().max(1.0) {
        return Err(EvalError::Parameter(format!("hop mismatch: {} vs {}", a.hop_secs, b.hop_secs)));
    }
    let pairs: Vec<(f64, f64)> = a
        .frames
        .iter()
        .zip(&b.frames)
        .filter_map(|(x, y)| Some((x.f0?, y.f0?)))
        .collect();
    if pairs.len() < 2 {
        return Err(EvalError::Undefined(format!("{} frames voiced in both tracks, need 2", pairs.len())));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::Undefined("constant pitch track has no correlation".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
