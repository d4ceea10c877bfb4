use serde::{Deserialize, Serialize};

use super::MediaError;

/// Frame rate as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u32; 2]", into = "[u32; 2]")]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub fn new(num: u32, den: u32) -> Result<Self, MediaError> {
        if num == 0 || den == 0 {
            return Err(MediaError::Invalid(format!(
                "frame rate {num}/{den} must have positive terms"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn as_f64(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl TryFrom<[u32; 2]> for Rational {
    type Error = String;

    fn try_from([num, den]: [u32; 2]) -> Result<Self, Self::Error> {
        Rational::new(num, den).map_err(|e| e.to_string())
    }
}

impl From<Rational> for [u32; 2] {
    fn from(r: Rational) -> Self {
        [r.num, r.den]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoHeader {
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub fps: Rational,
}

impl VideoHeader {
    /// Bytes in one RGB frame, or `None` if the dimensions overflow.
    pub fn frame_len(&self) -> Option<usize> {
        frame_len(self.width, self.height)
    }
}

pub(crate) fn frame_len(width: u32, height: u32) -> Option<usize> {
    u64::from(width)
        .checked_mul(u64::from(height))?
        .checked_mul(3)
        .and_then(|n| usize::try_from(n).ok())
}

/// One decoded frame: interleaved 8-bit RGB, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameBuffer {
    width: u32,
    height: u32,
    index: u64,
    pixels: Vec<u8>,
}

impl FrameBuffer {
    pub fn new(width: u32, height: u32, index: u64, pixels: Vec<u8>) -> Result<Self, MediaError> {
        if width == 0 || height == 0 {
            return Err(MediaError::Invalid(format!(
                "frame dimensions {width}x{height} must be positive"
            )));
        }
        let expected = frame_len(width, height)
            .ok_or_else(|| MediaError::Invalid(format!("{width}x{height} overflows")))?;
        if pixels.len() != expected {
            return Err(MediaError::Invalid(format!(
                "frame {index}: {} pixel bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            index,
            pixels,
        })
    }

    /// A frame filled with one color.
    pub fn filled(width: u32, height: u32, index: u64, rgb: [u8; 3]) -> Result<Self, MediaError> {
        let len = frame_len(width, height)
            .ok_or_else(|| MediaError::Invalid(format!("{width}x{height} overflows")))?;
        let pixels = rgb.iter().copied().cycle().take(len).collect();
        Self::new(width, height, index, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn set_index(&mut self, index: u64) {
        self.index = index;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize * self.width as usize + x as usize) * 3
    }
}

/// Normalized audio, channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    sample_rate: u32,
    channels: u16,
    samples: Vec<f32>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, channels: u16, samples: Vec<f32>) -> Result<Self, MediaError> {
        if sample_rate == 0 || channels == 0 {
            return Err(MediaError::Invalid(
                "sample rate and channel count must be positive".into(),
            ));
        }
        if !samples.len().is_multiple_of(channels as usize) {
            return Err(MediaError::Invalid(format!(
                "{} samples do not divide into {channels} channels",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(MediaError::Invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            sample_rate,
            channels,
            samples,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f32>) -> Result<Self, MediaError> {
        Self::new(sample_rate, 1, samples)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    /// Samples per channel.
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn duration_secs(&self) -> f64 {
        self.frames() as f64 / f64::from(self.sample_rate)
    }

    /// Mean of the channels, as `f64`.
    pub fn downmix(&self) -> Vec<f64> {
        let ch = self.channels as usize;
        self.samples
            .chunks_exact(ch)
            .map(|c| c.iter().map(|&s| f64::from(s)).sum::<f64>() / ch as f64)
            .collect()
    }
}
