//! Core de-identification engine: native media formats, detection ingestion,
//! hiding kernels, landmark overlays, voice anonymization, the single-pass
//! masking pipeline and the privacy/utility evaluation metrics.
//!
//! Everything in this crate runs without external processes as long as the
//! inputs are RVF video and PCM16 WAV audio. Other containers go through
//! [`media::transcode`], which shells out to an external transcoder.

pub mod detection;
pub mod eval;
pub mod hiding;
pub mod mask;
pub mod media;
pub mod overlay;
pub mod pipeline;
pub mod protocol;
pub mod voice;

pub use mask::Mask;
pub use media::{AudioClip, FrameBuffer, Rational, VideoHeader};
