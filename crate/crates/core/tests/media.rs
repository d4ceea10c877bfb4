use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use mask_core::media::rvf::{encode_rvf, header_for, read_rvf, write_rvf_file};
use mask_core::media::transcode::{open_video, Transcoder};
use mask_core::media::wav::{encode_wav, read_wav};
use mask_core::media::MediaError;
use mask_core::{AudioClip, FrameBuffer, Rational, VideoHeader};
use proptest::prelude::*;

const W: u32 = 4;
const H: u32 = 3;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Stand-ins for the probe and decoder binaries. The "container" is a raw
/// rgb24 dump; the probe derives its frame count from the file size, so the
/// decoded count is compared against a report computed independently of the
/// pipe reader.
fn fake_transcoder(dir: &Path) -> Transcoder {
    let frame = W * H * 3;
    let probe = script(
        dir,
        "fakeprobe",
        &format!(
            "for a; do f=\"$a\"; done\nn=$(( $(wc -c < \"$f\") / {frame} ))\necho \"{W},{H},25/1,$n\""
        ),
    );
    let ffmpeg = script(
        dir,
        "fakeffmpeg",
        "while [ $# -gt 0 ]; do\n  if [ \"$1\" = -i ]; then cat \"$2\"; exit 0; fi\n  shift\ndone\nexit 1",
    );
    Transcoder::new(ffmpeg, probe)
}

fn raw_clip(n: u64) -> Vec<u8> {
    (0..u64::from(W * H * 3) * n).map(|i| (i * 7 % 251) as u8).collect()
}

#[test]
fn decode_yields_the_probed_frame_count() {
    let dir = tempfile::tempdir().unwrap();
    let tc = fake_transcoder(dir.path());
    let input = dir.path().join("clip.mkv");
    let raw = raw_clip(10);
    fs::write(&input, &raw).unwrap();

    let reported = tc.probe(&input).unwrap().frame_count;
    let (header, frames) = open_video(&input, &tc).unwrap();
    assert_eq!(reported, 10);
    assert_eq!(frames.len(), reported as usize);
    assert_eq!(header.frame_count, 10);
    assert_eq!((header.width, header.height), (W, H));
    let joined: Vec<u8> = frames.iter().flat_map(|f| f.pixels().to_vec()).collect();
    assert_eq!(joined, raw);
    assert!(frames.iter().enumerate().all(|(i, f)| f.index() == i as u64));
}

#[test]
fn short_final_frame_is_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let tc = fake_transcoder(dir.path());
    let input = dir.path().join("clip.mkv");
    let mut raw = raw_clip(3);
    raw.truncate(raw.len() - 5);
    fs::write(&input, &raw).unwrap();
    match open_video(&input, &tc) {
        Err(MediaError::Truncated { frame, .. }) => assert_eq!(frame, 2),
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn failing_transcoder_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let probe = script(dir.path(), "probe", "echo 'moov atom not found' >&2\nexit 3");
    let tc = Transcoder::new(dir.path().join("unused"), probe);
    let input = dir.path().join("clip.mp4");
    fs::write(&input, b"not a video").unwrap();
    match open_video(&input, &tc) {
        Err(MediaError::Transcode { diagnostics, status }) => {
            assert!(diagnostics.contains("moov atom not found"), "{diagnostics}");
            assert!(status.contains('3'), "{status}");
        }
        other => panic!("expected transcode error, got {other:?}"),
    }
}

#[test]
fn missing_transcoder_is_environment_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("clip.mp4");
    fs::write(&input, b"not a video").unwrap();
    let tc = Transcoder::new(dir.path().join("no-ffmpeg"), dir.path().join("no-ffprobe"));
    assert!(matches!(open_video(&input, &tc), Err(MediaError::Environment(_))));
}

#[test]
fn rvf_input_never_touches_the_transcoder() {
    let dir = tempfile::tempdir().unwrap();
    let frames: Vec<_> = (0..3).map(|i| FrameBuffer::filled(2, 2, i, [i as u8; 3]).unwrap()).collect();
    let header = header_for(&frames, Rational::new(30000, 1001).unwrap()).unwrap();
    let path = dir.path().join("in.rvf");
    write_rvf_file(&path, &header, &frames).unwrap();
    let tc = Transcoder::new(dir.path().join("no-ffmpeg"), dir.path().join("no-ffprobe"));
    let (h2, back) = open_video(&path, &tc).unwrap();
    assert_eq!(h2, header);
    assert_eq!(back, frames);
}

fn video() -> impl Strategy<Value = (u32, u32, Vec<Vec<u8>>)> {
    (1u32..9, 1u32..9, 0usize..5).prop_flat_map(|(w, h, n)| {
        let len = (w * h * 3) as usize;
        (Just(w), Just(h), prop::collection::vec(prop::collection::vec(any::<u8>(), len), n))
    })
}

proptest! {
    #[test]
    fn rvf_round_trip_is_byte_exact((w, h, payloads) in video(), num in 1u32..120, den in 1u32..1002) {
        let frames: Vec<_> = payloads
            .into_iter()
            .enumerate()
            .map(|(i, p)| FrameBuffer::new(w, h, i as u64, p).unwrap())
            .collect();
        let header = VideoHeader {
            width: w,
            height: h,
            frame_count: frames.len() as u32,
            fps: Rational::new(num, den).unwrap(),
        };
        let bytes = encode_rvf(&header, &frames).unwrap();
        prop_assert_eq!(bytes.len(), 24 + frames.len() * (w * h * 3) as usize);
        let (back_header, back) = read_rvf(bytes.as_slice()).unwrap();
        prop_assert_eq!(back_header, header);
        prop_assert_eq!(back, frames);
    }

    #[test]
    fn wav_round_trip_error_is_bounded(
        samples in prop::collection::vec(-1.0f32..=1.0, 0..400),
        stereo in any::<bool>(),
        rate in 8000u32..48001,
    ) {
        let channels = if stereo { 2 } else { 1 };
        let mut samples = samples;
        samples.truncate(samples.len() / channels * channels);
        let clip = AudioClip::new(rate, channels as u16, samples.clone()).unwrap();
        let back = read_wav(encode_wav(&clip).unwrap().as_slice()).unwrap();
        prop_assert_eq!(back.sample_rate(), rate);
        prop_assert_eq!(back.channels(), channels as u16);
        for (a, b) in samples.iter().zip(back.samples()) {
            prop_assert!((f64::from(*a) - f64::from(*b)).abs() <= 1.0 / 32767.0);
        }
    }
}
