//! McAdams-coefficient anonymization: LPC pole angles are warped as
//! `phi -> phi^alpha`, moving formants while the residual (excitation) is
//! kept.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lpc::{analysis_filter, lpc_analyze, synthesis_filter, FilterState};
use super::roots::{eval_monic, monic_roots, poly_from_roots};
use super::VoiceError;
use crate::media::AudioClip;

/// Roots whose `|A(root)|` exceeds this are treated as a failed solve.
pub const ROOT_RESIDUAL_LIMIT: f64 = 1e-8;
/// Largest imaginary part tolerated in the rebuilt polynomial.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McAdamsParams {
    pub alpha: f64,
    pub lpc_order: usize,
    pub frame_ms: f64,
    pub max_pole_radius: f64,
}

impl Default for McAdamsParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            lpc_order: 20,
            frame_ms: 20.0,
            max_pole_radius: 0.998,
        }
    }
}

impl McAdamsParams {
    pub fn validate(&self) -> Result<(), VoiceError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(VoiceError::Parameter(format!("alpha {} must be > 0", self.alpha)));
        }
        if self.lpc_order < 2 {
            return Err(VoiceError::Parameter(format!("lpc order {} must be >= 2", self.lpc_order)));
        }
        if !(self.frame_ms.is_finite() && self.frame_ms > 0.0) {
            return Err(VoiceError::Parameter(format!("frame_ms {} must be > 0", self.frame_ms)));
        }
        if !(self.max_pole_radius > 0.0 && self.max_pole_radius < 1.0) {
            return Err(VoiceError::Parameter(format!(
                "max pole radius {} must be in (0, 1)",
                self.max_pole_radius
            )));
        }
        Ok(())
    }

    pub fn frame_len(&self, sample_rate: u32) -> usize {
        (self.frame_ms * f64::from(sample_rate) / 1000.0).round() as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct McAdamsReport {
    pub frames: usize,
    /// Frames whose root solve failed the residual check and were passed
    /// through unmodified.
    pub fallback_frames: usize,
}

/// Moves each upper-half-plane root to angle `phi^alpha` (its conjugate
/// mirrors it) and clamps complex roots to `max_radius`. Real roots stay.
pub fn warp_poles(roots: &[Complex64], alpha: f64, max_radius: f64) -> Vec<Complex64> {
    roots
        .iter()
        .map(|&z| {
            if z.im == 0.0 {
                return z;
            }
            let (r, phi) = z.to_polar();
            let warped = phi.abs().powf(alpha).copysign(phi);
            Complex64::from_polar(r.min(max_radius), warped)
        })
        .collect()
}

/// Computes the warped predictor for one frame's `A(z)`. `None` means the
/// root solve was not trustworthy.
pub fn warp_predictor(a: &[f64], alpha: f64, max_radius: f64) -> Option<Vec<f64>> {
    if a.iter().all(|&c| c == 0.0) {
        return Some(a.to_vec());
    }
    let roots = monic_roots(a);
    if roots.len() != a.len() || roots.iter().any(|&z| eval_monic(a, z).norm() > ROOT_RESIDUAL_LIMIT) {
        return None;
    }
    let (rebuilt, imag) = poly_from_roots(&warp_poles(&roots, alpha, max_radius));
    (imag < IMAG_RESIDUE_LIMIT && rebuilt.iter().all(|c| c.is_finite())).then_some(rebuilt)
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Anonymizes a clip (downmixed to mono). Non-overlapping frames of
/// `frame_ms` are analysed with a Hamming window; the residual and the
/// resynthesis run sample-continuously with state carried across frames,
/// so output length equals input length.
pub fn mcadams_anonymize(clip: &AudioClip, params: &McAdamsParams) -> Result<(AudioClip, McAdamsReport), VoiceError> {
    params.validate()?;
    let order = params.lpc_order;
    let frame_len = params.frame_len(clip.sample_rate());
    if frame_len < order + 1 {
        return Err(VoiceError::Parameter(format!(
            "{} ms at {} Hz gives {frame_len} samples, need at least {}",
            params.frame_ms,
            clip.sample_rate(),
            order + 1
        )));
    }
    let x = clip.downmix();
    let window = hamming(frame_len);
    let mut analysis = FilterState::new(order);
    let mut synthesis = FilterState::new(order);
    let mut residual = Vec::with_capacity(frame_len);
    let mut out = Vec::with_capacity(x.len());
    let mut report = McAdamsReport::default();
    let mut current = vec![0.0; order];
    let mut warped = current.clone();

    for seg in x.chunks(frame_len) {
        report.frames += 1;
        if seg.len() > order {
            let win = if seg.len() == frame_len { window.clone() } else { hamming(seg.len()) };
            let frame: Vec<f64> = seg.iter().zip(&win).map(|(s, w)| s * w).collect();
            current = lpc_analyze(&frame, order)?.coefficients;
            warped = match warp_predictor(&current, params.alpha, params.max_pole_radius) {
                Some(w) => w,
                None => {
                    report.fallback_frames += 1;
                    current.clone()
                }
            };
        }
        residual.clear();
        analysis_filter(&current, seg, &mut analysis, &mut residual);
        synthesis_filter(&warped, &residual, &mut synthesis, &mut out);
    }

    if out.iter().any(|v| !v.is_finite()) {
        return Err(VoiceError::Numeric("synthesis produced non-finite samples".into()));
    }
    if report.fallback_frames > 0 {
        log::warn!(
            "mcadams: {} of {} frames fell back to pass-through",
            report.fallback_frames,
            report.frames
        );
    }
    let samples = out.into_iter().map(|v| v as f32).collect();
    Ok((AudioClip::mono(clip.sample_rate(), samples)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warp_identity_and_angle_law() {
        let z = Complex64::from_polar(0.9, 0.19635);
        let same = warp_poles(&[z, z.conj()], 1.0, 0.998);
        assert!((same[0] - z).norm() < 1e-15);
        let w = warp_poles(&[z, z.conj(), Complex64::new(0.5, 0.0)], 0.8, 0.998);
        assert!((w[0].arg() - 0.19635f64.powf(0.8)).abs() < 1e-12);
        assert!((w[1] - w[0].conj()).norm() < 1e-15);
        assert_eq!(w[2], Complex64::new(0.5, 0.0));
        let hot = warp_poles(&[Complex64::from_polar(0.9995, 1.0)], 1.0, 0.998);
        assert!((hot[0].norm() - 0.998).abs() < 1e-12);
    }

    #[test]
    fn silence_stays_silent() {
        let clip = AudioClip::mono(16_000, vec![0.0; 4000]).unwrap();
        let (out, report) = mcadams_anonymize(&clip, &McAdamsParams::default()).unwrap();
        assert_eq!(out.samples().len(), 4000);
        assert!(out.samples().iter().all(|&s| s == 0.0));
        assert_eq!(report.fallback_frames, 0);
    }

    #[test]
    fn parameter_checks() {
        let clip = AudioClip::mono(8_000, vec![0.0; 100]).unwrap();
        let p = McAdamsParams {
            frame_ms: 2.0,
            ..Default::default()
        };
        assert!(mcadams_anonymize(&clip, &p).is_err());
        let p = McAdamsParams {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
