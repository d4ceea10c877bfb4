//! RVF: the engine's native raw video container.
//!
//! Layout (little-endian): `"RVF1"`, then u32 width, height, frame_count,
//! fps_num, fps_den, then `frame_count` frames of `width * height * 3` RGB
//! bytes, row-major.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::Path;

use super::frame::frame_len;
use super::{FrameBuffer, MediaError, Rational, VideoHeader};

pub const MAGIC: &[u8; 4] = b"RVF1";
pub const HEADER_LEN: usize = 24;

/// Checks the first bytes of a file for the RVF magic.
pub fn is_rvf(path: &Path) -> io::Result<bool> {
    let mut magic = [0u8; 4];
    let mut f = File::open(path)?;
    match f.read_exact(&mut magic) {
        Ok(()) => Ok(&magic == MAGIC),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(false),
        Err(e) => Err(e),
    }
}

pub fn encode_header(header: &VideoHeader) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[..4].copy_from_slice(MAGIC);
    let fields = [
        header.width,
        header.height,
        header.frame_count,
        header.fps.num,
        header.fps.den,
    ];
    for (i, v) in fields.iter().enumerate() {
        out[4 + i * 4..8 + i * 4].copy_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_header(buf: &[u8; HEADER_LEN]) -> Result<VideoHeader, MediaError> {
    if &buf[..4] != MAGIC {
        return Err(MediaError::Format {
            offset: 0,
            message: format!("bad magic {:02x?}", &buf[..4]),
        });
    }
    let field = |i: usize| u32::from_le_bytes(buf[4 + i * 4..8 + i * 4].try_into().unwrap());
    let (width, height, frame_count) = (field(0), field(1), field(2));
    if width == 0 || height == 0 {
        return Err(MediaError::Format {
            offset: 4,
            message: format!("zero dimension {width}x{height}"),
        });
    }
    if frame_len(width, height).is_none() {
        return Err(MediaError::Format {
            offset: 4,
            message: format!("dimensions {width}x{height} overflow the frame size"),
        });
    }
    let fps = Rational::new(field(3), field(4)).map_err(|e| MediaError::Format {
        offset: 16,
        message: e.to_string(),
    })?;
    Ok(VideoHeader {
        width,
        height,
        frame_count,
        fps,
    })
}

/// Streaming RVF reader. Frames are yielded with indices counting from the
/// first frame read (0 unless [`RvfReader::seek_frame`] was used).
pub struct RvfReader<R> {
    inner: R,
    header: VideoHeader,
    frame_len: usize,
    next: u32,
}

impl<R: Read> RvfReader<R> {
    pub fn new(mut inner: R) -> Result<Self, MediaError> {
        let mut buf = [0u8; HEADER_LEN];
        read_full(&mut inner, &mut buf).and_then(|n| {
            if n < HEADER_LEN {
                Err(MediaError::Format {
                    offset: n as u64,
                    message: "truncated header".into(),
                })
            } else {
                Ok(())
            }
        })?;
        let header = decode_header(&buf)?;
        Ok(Self {
            inner,
            frame_len: header.frame_len().expect("checked in decode_header"),
            header,
            next: 0,
        })
    }

    pub fn header(&self) -> &VideoHeader {
        &self.header
    }

    pub fn read_frame(&mut self) -> Result<Option<FrameBuffer>, MediaError> {
        if self.next >= self.header.frame_count {
            return Ok(None);
        }
        let mut pixels = vec![0u8; self.frame_len];
        let n = read_full(&mut self.inner, &mut pixels)?;
        if n < self.frame_len {
            return Err(MediaError::Truncated {
                frame: self.next,
                offset: self.byte_offset(self.next) + n as u64,
            });
        }
        let frame = FrameBuffer::new(
            self.header.width,
            self.header.height,
            u64::from(self.next),
            pixels,
        )?;
        self.next += 1;
        Ok(Some(frame))
    }

    fn byte_offset(&self, frame: u32) -> u64 {
        HEADER_LEN as u64 + u64::from(frame) * self.frame_len as u64
    }
}

impl<R: Read + Seek> RvfReader<R> {
    /// Positions the reader so the next frame read is `index`.
    pub fn seek_frame(&mut self, index: u32) -> Result<(), MediaError> {
        if index > self.header.frame_count {
            return Err(MediaError::Invalid(format!(
                "frame {index} past end ({} frames)",
                self.header.frame_count
            )));
        }
        self.inner.seek(SeekFrom::Start(self.byte_offset(index)))?;
        self.next = index;
        Ok(())
    }
}

impl<R: Read> Iterator for RvfReader<R> {
    type Item = Result<FrameBuffer, MediaError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_frame().transpose()
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize, MediaError> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

pub fn read_rvf<R: Read>(source: R) -> Result<(VideoHeader, Vec<FrameBuffer>), MediaError> {
    let reader = RvfReader::new(source)?;
    let header = *reader.header();
    let frames = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((header, frames))
}

pub fn read_rvf_file(path: &Path) -> Result<(VideoHeader, Vec<FrameBuffer>), MediaError> {
    read_rvf(BufReader::new(File::open(path)?))
}

pub fn read_rvf_header(path: &Path) -> Result<VideoHeader, MediaError> {
    Ok(*RvfReader::new(BufReader::new(File::open(path)?))?.header())
}

/// Reads frames `range` of an RVF file; frame indices are absolute.
pub fn read_rvf_range(
    path: &Path,
    range: Range<u32>,
) -> Result<(VideoHeader, Vec<FrameBuffer>), MediaError> {
    let mut reader = RvfReader::new(BufReader::new(File::open(path)?))?;
    let header = *reader.header();
    if range.start > range.end || range.end > header.frame_count {
        return Err(MediaError::Invalid(format!(
            "frame range {range:?} outside 0..{}",
            header.frame_count
        )));
    }
    reader.seek_frame(range.start)?;
    let mut frames = Vec::with_capacity(range.len());
    for _ in range {
        match reader.read_frame()? {
            Some(f) => frames.push(f),
            None => unreachable!("range checked against frame_count"),
        }
    }
    Ok((header, frames))
}

/// Streaming writer; checks dimensions per frame and the declared count on
/// [`RvfWriter::finish`].
pub struct RvfWriter<W: Write> {
    inner: W,
    header: VideoHeader,
    written: u64,
}

impl<W: Write> RvfWriter<W> {
    pub fn new(mut inner: W, header: VideoHeader) -> Result<Self, MediaError> {
        if header.width == 0 || header.height == 0 || header.frame_len().is_none() {
            return Err(MediaError::Invalid(format!(
                "unusable dimensions {}x{}",
                header.width, header.height
            )));
        }
        inner.write_all(&encode_header(&header))?;
        Ok(Self {
            inner,
            header,
            written: 0,
        })
    }

    pub fn write_frame(&mut self, frame: &FrameBuffer) -> Result<(), MediaError> {
        if frame.width() != self.header.width || frame.height() != self.header.height {
            return Err(MediaError::DimensionMismatch {
                frame: self.written as usize,
                width: self.header.width,
                height: self.header.height,
                found_width: frame.width(),
                found_height: frame.height(),
            });
        }
        if self.written >= u64::from(self.header.frame_count) {
            return Err(MediaError::FrameCount {
                declared: self.header.frame_count,
                written: self.written + 1,
            });
        }
        self.inner.write_all(frame.pixels())?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, MediaError> {
        if self.written != u64::from(self.header.frame_count) {
            return Err(MediaError::FrameCount {
                declared: self.header.frame_count,
                written: self.written,
            });
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_rvf<'a, W, I>(sink: W, header: &VideoHeader, frames: I) -> Result<W, MediaError>
where
    W: Write,
    I: IntoIterator<Item = &'a FrameBuffer>,
{
    let mut writer = RvfWriter::new(sink, *header)?;
    for frame in frames {
        writer.write_frame(frame)?;
    }
    writer.finish()
}

pub fn encode_rvf(header: &VideoHeader, frames: &[FrameBuffer]) -> Result<Vec<u8>, MediaError> {
    let cap = HEADER_LEN + frames.len() * header.frame_len().unwrap_or(0);
    write_rvf(Vec::with_capacity(cap), header, frames)
}

pub fn write_rvf_file(
    path: &Path,
    header: &VideoHeader,
    frames: &[FrameBuffer],
) -> Result<(), MediaError> {
    let w = write_rvf(BufWriter::new(File::create(path)?), header, frames)?;
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    Ok(())
}

/// Header describing `frames`, which must be non-empty.
pub fn header_for(frames: &[FrameBuffer], fps: Rational) -> Result<VideoHeader, MediaError> {
    let first = frames
        .first()
        .ok_or_else(|| MediaError::Invalid("no frames".into()))?;
    Ok(VideoHeader {
        width: first.width(),
        height: first.height(),
        frame_count: u32::try_from(frames.len())
            .map_err(|_| MediaError::Invalid("too many frames".into()))?,
        fps,
    })
}
