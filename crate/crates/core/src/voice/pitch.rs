//! Pitch shifting by WSOLA time-stretch followed by linear-interpolation
//! resampling.

use serde::{Deserialize, Serialize};

use super::VoiceError;
use crate::media::AudioClip;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WsolaParams {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub search_ms: f64,
}

impl Default for WsolaParams {
    fn default() -> Self {
        Self {
            window_ms: 25.0,
            hop_ms: 12.5,
            search_ms: 7.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchShiftParams {
    pub ratio: f64,
    pub wsola: WsolaParams,
}

impl Default for PitchShiftParams {
    fn default() -> Self {
        Self {
            ratio: 1.0,
            wsola: WsolaParams::default(),
        }
    }
}

impl PitchShiftParams {
    pub fn validate(&self) -> Result<(), VoiceError> {
        if !(0.5..=2.0).contains(&self.ratio) {
            return Err(VoiceError::Parameter(format!("pitch ratio {} outside [0.5, 2]", self.ratio)));
        }
        let w = &self.wsola;
        if !(w.hop_ms > 0.0 && w.window_ms > w.hop_ms && w.search_ms >= 0.0) {
            return Err(VoiceError::Parameter(format!(
                "WSOLA needs window > hop > 0 and search >= 0, got {w:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchShiftOutput {
    pub clip: AudioClip,
    /// Set when the input was shorter than one window and returned as is.
    pub too_short: bool,
}

/// Hann crossfade sampled at half-integer points; at 50 % overlap the
/// shifted copies sum to exactly one and no tap is zero.
fn crossfade_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin();
            s * s
        })
        .collect()
}

/// WSOLA time-stretch: output is about `factor * input.len()` samples at
/// the original pitch. Each analysis segment is taken near its nominal
/// position, shifted within `+-search` samples to best match (normalized
/// cross-correlation) the natural continuation of the previous segment.
pub fn time_stretch(input: &[f64], factor: f64, window: usize, hop: usize, search: usize) -> Vec<f64> {
    let target = (input.len() as f64 * factor).round() as usize;
    if input.len() < window || target == 0 {
        return input.to_vec();
    }
    // zero tail so every segment read stays in bounds
    let mut x = input.to_vec();
    x.resize(input.len() + window + hop, 0.0);
    let last_start = x.len() - window;
    let win = crossfade_window(window);
    let analysis_hop = hop as f64 / factor;

    let mut out = vec![0.0; target + window];
    let mut weight = vec![0.0; target + window];
    let mut prev: Option<usize> = None;
    let mut k = 0usize;
    while k * hop < target {
        let nominal = ((k as f64 * analysis_hop).round() as usize).min(last_start);
        let pos = match prev {
            None => nominal,
            Some(p) => {
                let natural = (p + hop).min(last_start);
                best_offset(&x, natural, nominal, window, search, last_start)
            }
        };
        let out_pos = k * hop;
        for i in 0..window {
            out[out_pos + i] += x[pos + i] * win[i];
            weight[out_pos + i] += win[i];
        }
        prev = Some(pos);
        k += 1;
    }
    out.truncate(target);
    for (o, w) in out.iter_mut().zip(&weight) {
        if *w > 1e-9 {
            *o /= w;
        }
    }
    out
}

fn best_offset(x: &[f64], natural: usize, nominal: usize, window: usize, search: usize, last_start: usize) -> usize {
    let reference = &x[natural..natural + window];
    let lo = nominal.saturating_sub(search);
    let hi = (nominal + search).min(last_start);
    let score = |c: usize| {
        let cand = &x[c..c + window];
        let (mut dot, mut energy) = (0.0, 0.0);
        for (a, b) in cand.iter().zip(reference) {
            dot += a * b;
            energy += a * a;
        }
        if energy > 0.0 {
            dot / energy.sqrt()
        } else {
            0.0
        }
    };
    let mut best = nominal.clamp(lo, hi);
    let mut best_score = score(best);
    // candidates by increasing distance from nominal; ties keep the nearer
    for d in 1..=search {
        for c in [nominal.checked_sub(d), Some(nominal + d)].into_iter().flatten() {
            if c < lo || c > hi {
                continue;
            }
            let s = score(c);
            if s > best_score + 1e-12 * best_score.abs().max(1e-300) {
                best = c;
                best_score = s;
            }
        }
    }
    best
}

/// Linear-interpolation resample reading the input at steps of `ratio`;
/// produces `len` samples.
pub fn resample_linear(input: &[f64], ratio: f64, len: usize) -> Vec<f64> {
    if input.is_empty() {
        return vec![0.0; len];
    }
    let last = input.len() - 1;
    (0..len)
        .map(|i| {
            let t = i as f64 * ratio;
            let j = t.floor() as usize;
            if j >= last {
                return input[last];
            }
            let frac = t - j as f64;
            input[j] * (1.0 - frac) + input[j + 1] * frac
        })
        .collect()
}

/// Shifts pitch by `ratio` keeping duration: stretch by `ratio` with WSOLA,
/// then resample by `ratio`. Multi-channel input is downmixed.
pub fn shift_pitch(clip: &AudioClip, params: &PitchShiftParams) -> Result<PitchShiftOutput, VoiceError> {
    params.validate()?;
    let sr = f64::from(clip.sample_rate());
    let to_samples = |ms: f64| (ms * sr / 1000.0).round() as usize;
    let window = to_samples(params.wsola.window_ms).max(2);
    let hop = to_samples(params.wsola.hop_ms).clamp(1, window - 1);
    let search = to_samples(params.wsola.search_ms);
    let x = clip.downmix();
    if x.len() < window {
        log::warn!("pitch shift: clip of {} samples shorter than one window", x.len());
        return Ok(PitchShiftOutput {
            clip: clip.clone(),
            too_short: true,
        });
    }
    let stretched = time_stretch(&x, params.ratio, window, hop, search);
    let y = resample_linear(&stretched, params.ratio, x.len());
    Ok(PitchShiftOutput {
        clip: AudioClip::mono(clip.sample_rate(), y.into_iter().map(|v| v as f32).collect())?,
        too_short: false,
    })
}
