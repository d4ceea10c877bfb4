#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use mask_core::detection::{bgsub_detect, DetectionTimeline, FrameDetections};
use mask_core::media::rvf::{header_for, write_rvf_file};
use mask_core::{FrameBuffer, Rational, VideoHeader};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub const FPS: Rational = Rational { num: 25, den: 1 };

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_video(n: u64, w: u32, h: u32, seed: u64) -> Vec<FrameBuffer> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let px = (0..w * h * 3).map(|_| r.gen()).collect();
            FrameBuffer::new(w, h, i, px).unwrap()
        })
        .collect()
}

/// A static textured background plus one textured box drifting across it.
/// No pixel is pure black, so any blackout is visible in every channel.
pub struct BoxClip {
    pub background: FrameBuffer,
    pub frames: Vec<FrameBuffer>,
}

pub fn moving_box_clip(seed: u64, n: u64, w: u32, h: u32) -> BoxClip {
    let mut r = rng(seed);
    let bg_px: Vec<u8> = (0..w * h * 3).map(|_| r.gen_range(40..=120)).collect();
    let background = FrameBuffer::new(w, h, 0, bg_px).unwrap();
    let (bw, bh) = (r.gen_range(8..=14), r.gen_range(10..=18));
    let (mut x, mut y) = (r.gen_range(0..w - bw) as i64, r.gen_range(0..h - bh) as i64);
    let (mut vx, mut vy) = (r.gen_range(1..=3) as i64, r.gen_range(-2..=2) as i64);
    let frames = (0..n)
        .map(|i| {
            let mut f = background.clone();
            f.set_index(i);
            for dy in 0..bh {
                for dx in 0..bw {
                    let rgb = [r.gen_range(170..=255), r.gen_range(30..=255), r.gen_range(170..=255)];
                    f.set(x as u32 + dx, y as u32 + dy, rgb);
                }
            }
            if x + vx < 0 || x + vx + bw as i64 > w as i64 {
                vx = -vx;
            }
            if y + vy < 0 || y + vy + bh as i64 > h as i64 {
                vy = -vy;
            }
            x += vx;
            y += vy;
            f
        })
        .collect();
    BoxClip { background, frames }
}

pub fn bgsub_timeline(clip: &BoxClip) -> DetectionTimeline {
    let (w, h) = (clip.background.width(), clip.background.height());
    let mut t = DetectionTimeline::new(w, h, FPS);
    for f in &clip.frames {
        t.frames.push(FrameDetections {
            index: f.index(),
            persons: bgsub_detect(&clip.background, f, 25, 20).unwrap(),
        });
    }
    t
}

pub fn write_video(path: &Path, frames: &[FrameBuffer]) -> VideoHeader {
    let header = header_for(frames, FPS).unwrap();
    write_rvf_file(path, &header, frames).unwrap();
    header
}

pub fn sine(freq: f64, rate: u32, secs: f64, amp: f64) -> Vec<f64> {
    let n = (secs * f64::from(rate)) as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / f64::from(rate)).sin()).collect()
}

/// Glottal-like pulse train with slow vibrato, shaped by three two-pole
/// formant resonators, plus a little breath noise.
pub fn speech_like(rate: u32, secs: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let n = (secs * f64::from(rate)) as usize;
    let sr = f64::from(rate);
    let mut phase = 0.0;
    let mut src = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let f0 = 120.0 + 15.0 * (2.0 * PI * 3.0 * t).sin();
        phase += f0 / sr;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        src.push(pulse + 0.01 * (r.gen::<f64>() - 0.5));
    }
    let mut y = src;
    for (freq, bw) in [(700.0, 90.0), (1200.0, 110.0), (2600.0, 160.0)] {
        y = resonate(&y, freq, (-PI * bw / sr).exp(), rate);
    }
    let peak = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    y.iter().map(|v| 0.5 * v / peak).collect()
}

/// Two-pole resonator with poles at `radius`·e^(±j2πf/rate).
pub fn resonate(x: &[f64], freq: f64, radius: f64, rate: u32) -> Vec<f64> {
    let w = 2.0 * PI * freq / f64::from(rate);
    let (a1, a2) = (2.0 * radius * w.cos(), -radius * radius);
    let mut y = Vec::with_capacity(x.len());
    let (mut y1, mut y2) = (0.0, 0.0);
    for &v in x {
        let out = v + a1 * y1 + a2 * y2;
        y.push(out);
        y2 = y1;
        y1 = out;
    }
    y
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect()
}

pub fn normalize(x: &[f64], peak: f64) -> Vec<f64> {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    x.iter().map(|v| peak * v / m).collect()
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Averaged Hann-windowed power spectrum over half-overlapping segments.
pub fn power_spectrum(x: &[f64], nfft: usize) -> Vec<f64> {
    let win = hann(nfft);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut acc = vec![0.0; nfft / 2 + 1];
    let mut start = 0;
    while start + nfft <= x.len() {
        let mut buf: Vec<Complex<f64>> = x[start..start + nfft]
            .iter()
            .zip(&win)
            .map(|(v, w)| Complex::new(v * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        start += nfft / 2;
    }
    acc
}

/// Frequency of the strongest spectral bin above `min_hz`, refined by a
/// parabola through the log powers of its neighbours.
pub fn peak_frequency(x: &[f64], rate: u32, nfft: usize, min_hz: f64) -> f64 {
    let p = power_spectrum(x, nfft);
    let bin_hz = f64::from(rate) / nfft as f64;
    let lo = (min_hz / bin_hz).ceil() as usize;
    let k = (lo.max(1)..p.len() - 1)
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .unwrap();
    let (a, b, c) = (p[k - 1].ln(), p[k].ln(), p[k + 1].ln());
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    (k as f64 + shift) * bin_hz
}

pub fn snr_db(reference: &[f64], test: &[f64]) -> f64 {
    let sig: f64 = reference.iter().map(|v| v * v).sum();
    let err: f64 = reference.iter().zip(test).map(|(a, b)| (a - b) * (a - b)).sum();
    10.0 * (sig / err.max(f64::MIN_POSITIVE)).log10()
}
