//! Frame and audio carriers plus the native file formats.

mod frame;
pub mod rvf;
pub mod transcode;
pub mod wav;

pub use frame::{AudioClip, FrameBuffer, Rational, VideoHeader};

use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("stream truncated in frame {frame} at byte {offset}")]
    Truncated { frame: u32, offset: u64 },
    #[error("frame {frame} is {found_width}x{found_height}, expected {width}x{height}")]
    DimensionMismatch {
        frame: usize,
        width: u32,
        height: u32,
        found_width: u32,
        found_height: u32,
    },
    #[error("header declares {declared} frames but {written} were written")]
    FrameCount { declared: u32, written: u64 },
    #[error("invalid media value: {0}")]
    Invalid(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("environment error: {0}")]
    Environment(String),
    #[error("transcoder exited with {status}: {diagnostics}")]
    Transcode { status: String, diagnostics: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}
