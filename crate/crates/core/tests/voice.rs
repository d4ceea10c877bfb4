use std::f64::consts::PI;

use mask_core::eval::{track_pitch, PitchTrackParams};
use mask_core::voice::{lpc_analyze, mcadams_anonymize, shift_pitch, McAdamsParams, PitchShiftParams};
use mask_core::AudioClip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const RATE: u32 = 16_000;

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

fn clip(x: &[f64]) -> AudioClip {
    AudioClip::mono(RATE, x.iter().map(|&v| v as f32).collect()).unwrap()
}

fn to_f64(c: &AudioClip) -> Vec<f64> {
    c.samples().iter().map(|&v| f64::from(v)).collect()
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Pulse train around 120 Hz with slow vibrato through three formant
/// resonators.
fn speech_like(secs: f64, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(RATE);
    let n = (secs * sr) as usize;
    let base = r.gen_range(100.0..180.0);
    let mut phase = 0.0;
    let mut y: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            phase += (base + 12.0 * (2.0 * PI * 2.5 * t).sin()) / sr;
            let pulse = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            pulse + 0.01 * (r.gen::<f64>() - 0.5)
        })
        .collect();
    for (f, bw) in [(650.0, 80.0), (1100.0, 100.0), (2500.0, 150.0)] {
        let rad: f64 = (-PI * bw / sr).exp();
        let w = 2.0 * PI * f / sr;
        let (a1, a2) = (2.0 * rad * w.cos(), -rad * rad);
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in &mut y {
            let out = *v + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = out;
            *v = out;
        }
    }
    let peak = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    y.iter().map(|v| 0.5 * v / peak).collect()
}

/// Step-down (reverse Levinson) recursion: `1 + a1 z^-1 + ...` is minimum
/// phase iff every reflection coefficient has magnitude below one.
fn is_minimum_phase(a: &[f64]) -> bool {
    let mut cur = a.to_vec();
    while let Some(&k) = cur.last() {
        if k.abs() >= 1.0 {
            return false;
        }
        let p = cur.len();
        let denom = 1.0 - k * k;
        cur = (0..p - 1).map(|i| (cur[i] - k * cur[p - 2 - i]) / denom).collect();
    }
    true
}

#[test]
fn white_noise_has_near_zero_predictor() {
    for seed in 0..5 {
        let x = gaussian(10_000, seed);
        let m = lpc_analyze(&x, 2).unwrap();
        assert!(m.coefficients.iter().all(|c| c.abs() < 0.2), "seed {seed}: {:?}", m.coefficients);
    }
}

#[test]
fn ar1_process_is_recovered() {
    for seed in 10..15 {
        let e = gaussian(20_000, seed);
        let mut x = Vec::with_capacity(e.len());
        let mut prev = 0.0;
        for v in e {
            prev = 0.9 * prev + v;
            x.push(prev);
        }
        let m = lpc_analyze(&x, 1).unwrap();
        assert!((m.coefficients[0] + 0.9).abs() <= 0.02, "seed {seed}: a1 = {}", m.coefficients[0]);
    }
}

#[test]
fn lpc_models_are_minimum_phase() {
    let mut r = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..50 {
        let x: Vec<f64> = if trial % 2 == 0 {
            speech_like(0.05, trial)
        } else {
            (0..320).map(|_| r.gen::<f64>() - 0.5).collect()
        };
        let m = lpc_analyze(&x, 20).unwrap();
        assert!(is_minimum_phase(&m.coefficients), "trial {trial}");
    }
}

#[test]
fn mcadams_keeps_length_and_energy_on_speech_corpus() {
    let params = McAdamsParams::default();
    for seed in 0..6 {
        let x = speech_like(1.5, seed);
        let (out, report) = mcadams_anonymize(&clip(&x), &params).unwrap();
        let y = to_f64(&out);
        assert_eq!(y.len(), x.len());
        assert!(y.iter().all(|v| v.is_finite()));
        assert_eq!(report.fallback_frames, 0, "seed {seed}");
        let db = 10.0 * (energy(&y) / energy(&x)).log10();
        assert!(db.abs() <= 6.0, "seed {seed}: energy moved {db:.2} dB");
    }
}

#[test]
fn mcadams_stays_bounded_with_aggressive_warping() {
    let x = speech_like(1.0, 3);
    for alpha in [0.5, 0.7, 1.3, 1.5] {
        let params = McAdamsParams { alpha, ..McAdamsParams::default() };
        let (out, _) = mcadams_anonymize(&clip(&x), &params).unwrap();
        assert!(out.samples().iter().all(|v| v.is_finite()), "alpha {alpha}");
    }
}

#[test]
fn stereo_is_downmixed_before_anonymizing() {
    let l = speech_like(0.5, 8);
    let interleaved: Vec<f32> = l.iter().flat_map(|&v| [v as f32, v as f32]).collect();
    let stereo = AudioClip::new(RATE, 2, interleaved).unwrap();
    let (a, _) = mcadams_anonymize(&stereo, &McAdamsParams::default()).unwrap();
    let (b, _) = mcadams_anonymize(&clip(&l), &McAdamsParams::default()).unwrap();
    assert_eq!(a.channels(), 1);
    assert_eq!(a.samples(), b.samples());
}

#[test]
fn pitch_shift_length_stays_within_one_hop() {
    let params = PitchShiftParams { ratio: 1.3, ..PitchShiftParams::default() };
    let hop = (params.wsola.hop_ms * f64::from(RATE) / 1000.0) as usize;
    for seed in 0..5 {
        let x = speech_like(0.8 + 0.1 * seed as f64, seed);
        let out = shift_pitch(&clip(&x), &params).unwrap();
        assert!(out.clip.frames().abs_diff(x.len()) <= hop);
    }
}

#[test]
fn reciprocal_shifts_restore_the_pitch_track() {
    let up = PitchShiftParams { ratio: 1.25, ..PitchShiftParams::default() };
    let down = PitchShiftParams { ratio: 1.0 / 1.25, ..PitchShiftParams::default() };
    let tp = PitchTrackParams::default();
    for seed in 0..3 {
        let x = clip(&speech_like(2.0, seed));
        let there = shift_pitch(&x, &up).unwrap().clip;
        let back = shift_pitch(&there, &down).unwrap().clip;
        let a = track_pitch(&x, &tp).unwrap();
        let b = track_pitch(&back, &tp).unwrap();
        let pairs: Vec<(f64, f64)> = a
            .frames
            .iter()
            .zip(&b.frames)
            .filter_map(|(p, q)| Some((p.f0?, q.f0?)))
            .collect();
        assert!(pairs.len() * 10 >= a.frames.len() * 8, "seed {seed}: only {} voiced pairs", pairs.len());
        let worst = pairs.iter().map(|(p, q)| (q / p - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.02, "seed {seed}: worst frame off by {:.2}%", worst * 100.0);
    }
}

#[test]
fn white_noise_is_mostly_unvoiced() {
    let x = gaussian(RATE as usize * 2, 4);
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let track = track_pitch(&clip(&x.iter().map(|v| 0.5 * v / peak).collect::<Vec<_>>()), &PitchTrackParams::default())
        .unwrap();
    let voiced = track.voiced().count();
    assert!(voiced * 10 <= track.frames.len(), "{voiced} of {} frames voiced", track.frames.len());
}
