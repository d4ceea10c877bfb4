//! Audio strategies: keep, drop, or anonymize ("switch") the voice track.

pub mod lpc;
mod mcadams;
mod pitch;
pub mod roots;

pub use lpc::{lpc_analyze, LpcModel};
pub use mcadams::{mcadams_anonymize, warp_poles, warp_predictor, McAdamsParams, McAdamsReport};
pub use pitch::{resample_linear, shift_pitch, time_stretch, PitchShiftOutput, PitchShiftParams, WsolaParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::media::{AudioClip, MediaError};

#[derive(Debug, Error)]
pub enum VoiceError {
    #[error("invalid voice parameter: {0}")]
    Parameter(String),
    #[error("voice input error: {0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Media(#[from] MediaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceStrategy {
    Preserve,
    Remove,
    Switch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoiceParams {
    pub strategy: VoiceStrategy,
    pub mcadams: McAdamsParams,
    pub pitch: PitchShiftParams,
}

impl Default for VoiceParams {
    fn default() -> Self {
        Self {
            strategy: VoiceStrategy::Preserve,
            mcadams: McAdamsParams::default(),
            pitch: PitchShiftParams::default(),
        }
    }
}

impl VoiceParams {
    pub fn validate(&self) -> Result<(), VoiceError> {
        self.mcadams.validate()?;
        self.pitch.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VoiceReport {
    pub mcadams: Option<McAdamsReport>,
    pub pitch_too_short: bool,
}

/// Applies the configured strategy. `Switch` runs McAdams warping then
/// pitch shifting and needs audio to be present.
pub fn apply_voice_strategy(
    clip: Option<&AudioClip>,
    params: &VoiceParams,
) -> Result<(Option<AudioClip>, VoiceReport), VoiceError> {
    match params.strategy {
        VoiceStrategy::Preserve => Ok((clip.cloned(), VoiceReport::default())),
        VoiceStrategy::Remove => Ok((None, VoiceReport::default())),
        VoiceStrategy::Switch => {
            let clip = clip.ok_or_else(|| VoiceError::Input("voice switch requested but the input has no audio".into()))?;
            params.validate()?;
            let (warped, mc) = mcadams_anonymize(clip, &params.mcadams)?;
            let shifted = shift_pitch(&warped, &params.pitch)?;
            Ok((
                Some(shifted.clip),
                VoiceReport {
                    mcadams: Some(mc),
                    pitch_too_short: shifted.too_short,
                },
            ))
        }
    }
}
