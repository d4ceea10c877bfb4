//! Delegation of arbitrary containers to an external transcoder (an
//! ffmpeg-compatible CLI pair). Frames cross the pipe as raw rgb24; the
//! dimensions come from a probe call beforehand.

use std::ffi::OsString;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, ExitStatus, Stdio};
use std::thread::JoinHandle;

use super::rvf::{self, RvfReader};
use super::{FrameBuffer, MediaError, Rational, VideoHeader};

pub const ENV_FFMPEG: &str = "MASK_FFMPEG";
pub const ENV_FFPROBE: &str = "MASK_FFPROBE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Decode,
    Encode,
}

#[derive(Debug, Clone)]
pub struct Transcoder {
    ffmpeg: PathBuf,
    ffprobe: PathBuf,
}

impl Default for Transcoder {
    fn default() -> Self {
        Self::from_env()
    }
}

impl Transcoder {
    pub fn new(ffmpeg: impl Into<PathBuf>, ffprobe: impl Into<PathBuf>) -> Self {
        Self {
            ffmpeg: ffmpeg.into(),
            ffprobe: ffprobe.into(),
        }
    }

    /// Binaries from `MASK_FFMPEG` / `MASK_FFPROBE`, falling back to the
    /// executable search path.
    pub fn from_env() -> Self {
        let pick = |var: &str, default: &str| {
            std::env::var_os(var)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(default))
        };
        Self::new(pick(ENV_FFMPEG, "ffmpeg"), pick(ENV_FFPROBE, "ffprobe"))
    }

    fn spawn(&self, program: &Path, args: &[OsString], stdin: Stdio) -> Result<Child, MediaError> {
        Command::new(program)
            .args(args)
            .stdin(stdin)
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => {
                    MediaError::Environment(format!(
                        "transcoder binary {} unavailable: {e}",
                        program.display()
                    ))
                }
                _ => MediaError::Io(e),
            })
    }

    /// Asks the probe binary for width, height, frame rate and frame count.
    pub fn probe(&self, input: &Path) -> Result<VideoHeader, MediaError> {
        let args: Vec<OsString> = vec![
            "-v".into(),
            "error".into(),
            "-select_streams".into(),
            "v:0".into(),
            "-count_frames".into(),
            "-show_entries".into(),
            "stream=width,height,r_frame_rate,nb_read_frames".into(),
            "-of".into(),
            "csv=p=0".into(),
            input.into(),
        ];
        let child = self.spawn(&self.ffprobe, &args, Stdio::null())?;
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(transcode_error(out.status, &out.stderr));
        }
        parse_probe(&String::from_utf8_lossy(&out.stdout))
    }

    /// Decodes `input` into a stream of frames via a raw rgb24 pipe.
    pub fn decode(&self, input: &Path) -> Result<DecodeStream, MediaError> {
        let header = self.probe(input)?;
        let args: Vec<OsString> = vec![
            "-v".into(),
            "error".into(),
            "-i".into(),
            input.into(),
            "-f".into(),
            "rawvideo".into(),
            "-pix_fmt".into(),
            "rgb24".into(),
            "-".into(),
        ];
        let mut child = self.spawn(&self.ffmpeg, &args, Stdio::null())?;
        let stdout = child.stdout.take().expect("piped");
        let stderr = drain(child.stderr.take().expect("piped"));
        Ok(DecodeStream {
            header,
            frame_len: header
                .frame_len()
                .ok_or_else(|| MediaError::Invalid("probed dimensions overflow".into()))?,
            child: Some(child),
            stdout,
            stderr: Some(stderr),
            next: 0,
        })
    }

    /// Extracts the first audio stream as 16-bit PCM WAV.
    pub fn extract_audio(&self, input: &Path, wav_out: &Path) -> Result<(), MediaError> {
        let args: Vec<OsString> = vec![
            "-v".into(),
            "error".into(),
            "-y".into(),
            "-i".into(),
            input.into(),
            "-vn".into(),
            "-acodec".into(),
            "pcm_s16le".into(),
            wav_out.into(),
        ];
        let out = self.spawn(&self.ffmpeg, &args, Stdio::null())?.wait_with_output()?;
        if !out.status.success() {
            return Err(transcode_error(out.status, &out.stderr));
        }
        Ok(())
    }

    /// Muxes an RVF video and optional WAV track into `output`; the
    /// container and codecs are whatever the transcoder picks for the
    /// output extension.
    pub fn encode(&self, video: &Path, audio: Option<&Path>, output: &Path) -> Result<(), MediaError> {
        let mut reader = RvfReader::new(io::BufReader::new(std::fs::File::open(video)?))?;
        let h = *reader.header();
        let mut args: Vec<OsString> = vec![
            "-v".into(),
            "error".into(),
            "-y".into(),
            "-f".into(),
            "rawvideo".into(),
            "-pix_fmt".into(),
            "rgb24".into(),
            "-s".into(),
            format!("{}x{}", h.width, h.height).into(),
            "-r".into(),
            format!("{}/{}", h.fps.num, h.fps.den).into(),
            "-i".into(),
            "-".into(),
        ];
        if let Some(a) = audio {
            args.extend(["-i".into(), a.into(), "-shortest".into()]);
        }
        args.push(output.into());
        let mut child = self.spawn(&self.ffmpeg, &args, Stdio::piped())?;
        let stderr = drain(child.stderr.take().expect("piped"));
        let _stdout = drain(child.stdout.take().expect("piped"));
        {
            let mut stdin = child.stdin.take().expect("piped");
            while let Some(frame) = reader.read_frame()? {
                if let Err(e) = stdin.write_all(frame.pixels()) {
                    if e.kind() == io::ErrorKind::BrokenPipe {
                        break;
                    }
                    return Err(e.into());
                }
            }
        }
        let status = child.wait()?;
        let diag = stderr.join().unwrap_or_default();
        if !status.success() {
            return Err(transcode_error(status, &diag));
        }
        Ok(())
    }
}

fn drain<R: Read + Send + 'static>(mut r: R) -> JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        buf
    })
}

fn transcode_error(status: ExitStatus, stderr: &[u8]) -> MediaError {
    MediaError::Transcode {
        status: status.to_string(),
        diagnostics: String::from_utf8_lossy(stderr).trim().to_string(),
    }
}

/// Parses `width,height,num/den,frames` as printed by the probe call.
pub fn parse_probe(text: &str) -> Result<VideoHeader, MediaError> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| MediaError::Unsupported("probe reported no video stream".into()))?;
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let bad = || MediaError::Unsupported(format!("unparseable probe output {line:?}"));
    if fields.len() < 4 {
        return Err(bad());
    }
    let width: u32 = fields[0].parse().map_err(|_| bad())?;
    let height: u32 = fields[1].parse().map_err(|_| bad())?;
    let (num, den) = fields[2].split_once('/').unwrap_or((fields[2], "1"));
    let fps = Rational::new(
        num.parse().map_err(|_| bad())?,
        den.parse().map_err(|_| bad())?,
    )?;
    let frame_count: u32 = fields[3].parse().map_err(|_| bad())?;
    if width == 0 || height == 0 {
        return Err(bad());
    }
    Ok(VideoHeader {
        width,
        height,
        frame_count,
        fps,
    })
}

/// Frames arriving from a decoding transcoder process.
pub struct DecodeStream {
    header: VideoHeader,
    frame_len: usize,
    child: Option<Child>,
    stdout: ChildStdout,
    stderr: Option<JoinHandle<Vec<u8>>>,
    next: u64,
}

impl DecodeStream {
    /// Dimensions and rate from the probe; `frame_count` is the probe's
    /// report, the stream itself ends when the pipe does.
    pub fn header(&self) -> &VideoHeader {
        &self.header
    }

    fn finish(&mut self) -> Result<(), MediaError> {
        if let Some(mut child) = self.child.take() {
            let status = child.wait()?;
            let diag = self
                .stderr
                .take()
                .map(|h| h.join().unwrap_or_default())
                .unwrap_or_default();
            if !status.success() {
                return Err(transcode_error(status, &diag));
            }
        }
        Ok(())
    }
}

impl Iterator for DecodeStream {
    type Item = Result<FrameBuffer, MediaError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.child.as_ref()?;
        let mut pixels = vec![0u8; self.frame_len];
        let mut filled = 0;
        while filled < pixels.len() {
            match self.stdout.read(&mut pixels[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(e.into())),
            }
        }
        if filled == 0 {
            return self.finish().err().map(Err);
        }
        if filled < self.frame_len {
            let _ = self.finish();
            return Some(Err(MediaError::Truncated {
                frame: self.next as u32,
                offset: self.next * self.frame_len as u64 + filled as u64,
            }));
        }
        let frame = FrameBuffer::new(self.header.width, self.header.height, self.next, pixels);
        self.next += 1;
        Some(frame)
    }
}

impl Drop for DecodeStream {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Opens a video for reading: RVF natively, anything else through the
/// transcoder. The native path never spawns a process.
pub fn open_video(
    path: &Path,
    transcoder: &Transcoder,
) -> Result<(VideoHeader, Vec<FrameBuffer>), MediaError> {
    if rvf::is_rvf(path)? {
        return rvf::read_rvf_file(path);
    }
    let stream = transcoder.decode(path)?;
    let mut header = *stream.header();
    let frames = stream.collect::<Result<Vec<_>, _>>()?;
    header.frame_count = frames.len() as u32;
    Ok((header, frames))
}
