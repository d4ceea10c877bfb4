//! PCM16 WAV boundary. Samples are normalized floats internally.

use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::{AudioClip, MediaError};

fn map_hound(e: hound::Error) -> MediaError {
    match e {
        hound::Error::IoError(io) => MediaError::Io(io),
        hound::Error::Unsupported => MediaError::Unsupported("WAV variant not supported".into()),
        hound::Error::FormatError(msg) => MediaError::Format {
            offset: 0,
            message: msg.into(),
        },
        other => MediaError::Unsupported(other.to_string()),
    }
}

pub fn pcm_to_float(s: i16) -> f32 {
    f32::from(s) / 32768.0
}

/// Inverse of [`pcm_to_float`]: scales by 32768 and clamps in the integer
/// domain, so every PCM value survives a decode/encode cycle unchanged.
pub fn float_to_pcm(f: f32) -> i16 {
    (f64::from(f) * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub fn read_wav<R: Read>(source: R) -> Result<AudioClip, MediaError> {
    let reader = hound::WavReader::new(source).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(MediaError::Unsupported("non-PCM (float) WAV".into()));
    }
    if spec.bits_per_sample != 16 {
        return Err(MediaError::Unsupported(format!(
            "{}-bit PCM, only 16-bit is accepted",
            spec.bits_per_sample
        )));
    }
    if !(1..=2).contains(&spec.channels) {
        return Err(MediaError::Unsupported(format!(
            "{} channels, only mono or stereo",
            spec.channels
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(pcm_to_float))
        .collect::<Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    AudioClip::new(spec.sample_rate, spec.channels, samples)
}

pub fn read_wav_file(path: &Path) -> Result<AudioClip, MediaError> {
    read_wav(BufReader::new(File::open(path)?))
}

pub fn write_wav<W: Write + Seek>(sink: W, clip: &AudioClip) -> Result<(), MediaError> {
    let spec = WavSpec {
        channels: clip.channels(),
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::new(sink, spec).map_err(map_hound)?;
    {
        let mut fast = writer.get_i16_writer(clip.samples().len() as u32);
        for &s in clip.samples() {
            fast.write_sample(float_to_pcm(s));
        }
        fast.flush().map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

pub fn encode_wav(clip: &AudioClip) -> Result<Vec<u8>, MediaError> {
    let mut cursor = Cursor::new(Vec::new());
    write_wav(&mut cursor, clip)?;
    Ok(cursor.into_inner())
}

pub fn write_wav_file(path: &Path, clip: &AudioClip) -> Result<(), MediaError> {
    let f = File::create(path)?;
    write_wav(std::io::BufWriter::new(f), clip)
}
