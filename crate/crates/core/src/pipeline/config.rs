use jsonschema::JSONSchema;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PipelineError;
use crate::hiding::{HidingParams, HidingStrategy};
use crate::overlay::OverlayStyle;
use crate::voice::VoiceParams;

const SCHEMA_TEXT: &str = include_str!("../../data/config_schema.json");
const PRESETS_TEXT: &str = include_str!("../../data/presets.json");

static SCHEMA: Lazy<Value> = Lazy::new(|| serde_json::from_str(SCHEMA_TEXT).expect("bundled schema is JSON"));
static COMPILED: Lazy<JSONSchema> = Lazy::new(|| JSONSchema::compile(&SCHEMA).expect("bundled schema compiles"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayKind {
    Skeleton,
    FaceMesh,
    Holistic,
}

impl OverlayKind {
    pub fn name(self) -> &'static str {
        match self {
            OverlayKind::Skeleton => "skeleton",
            OverlayKind::FaceMesh => "face_mesh",
            OverlayKind::Holistic => "holistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlaySpec {
    pub kind: OverlayKind,
    #[serde(default)]
    pub style: OverlayStyle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportFlags {
    pub kinematics_json: bool,
    pub kinematics_csv: bool,
}

impl ExportFlags {
    pub fn any(&self) -> bool {
        self.kinematics_json || self.kinematics_csv
    }
}

/// Full description of a masking job: hiding, then overlays, then audio,
/// then exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskingConfig {
    pub hiding: HidingParams,
    pub overlays: Vec<OverlaySpec>,
    pub voice: VoiceParams,
    pub exports: ExportFlags,
    /// Path of the detections document, if not supplied separately.
    pub detections: Option<String>,
    pub confidence_threshold: f64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self {
            hiding: HidingParams::default(),
            overlays: Vec::new(),
            voice: VoiceParams::default(),
            exports: ExportFlags::default(),
            detections: None,
            confidence_threshold: 0.5,
        }
    }
}

impl MaskingConfig {
    /// Capability names a worker must declare to run chunks of this job.
    pub fn required_capabilities(&self) -> Vec<String> {
        let mut caps = vec![self.hiding.strategy.name().to_string()];
        for o in &self.overlays {
            let name = o.kind.name().to_string();
            if !caps.contains(&name) {
                caps.push(name);
            }
        }
        caps
    }

    /// Overlap needed so chunked output matches a single pass.
    pub fn auto_overlap(&self) -> u64 {
        if self.hiding.strategy == HidingStrategy::InpaintMedian {
            self.hiding.median_window as u64 - 1
        } else {
            0
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Every capability name a fully featured worker can declare.
pub fn all_capabilities() -> Vec<String> {
    HidingStrategy::ALL
        .iter()
        .map(|s| s.name())
        .chain(["skeleton", "face_mesh", "holistic"])
        .map(String::from)
        .collect()
}

/// The JSON schema that configs are validated against and that clients
/// use to build forms.
pub fn config_schema() -> &'static Value {
    &SCHEMA
}

fn dotted(path: Vec<String>) -> String {
    let mut out = String::new();
    for chunk in path {
        if chunk.bytes().all(|b| b.is_ascii_digit()) && !chunk.is_empty() {
            out.push_str(&format!("[{chunk}]"));
        } else {
            if !out.is_empty() {
                out.push('.');
            }
            out.push_str(&chunk);
        }
    }
    out
}

/// Schema check, then typed parse, then cross-field rules. The first
/// violation is reported with its field path.
pub fn validate_config(document: &Value) -> Result<MaskingConfig, PipelineError> {
    if let Err(mut errors) = COMPILED.validate(document) {
        let first = errors.next().expect("failed validation yields an error");
        return Err(PipelineError::Config {
            path: dotted(first.instance_path.clone().into_vec()),
            message: first.to_string(),
        });
    }
    let config: MaskingConfig = serde_path_to_error::deserialize(document).map_err(|e| PipelineError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if config.hiding.canny.low_threshold >= config.hiding.canny.high_threshold {
        return Err(PipelineError::Config {
            path: "hiding.canny.low_threshold".into(),
            message: format!(
                "low threshold {} must be below high threshold {}",
                config.hiding.canny.low_threshold, config.hiding.canny.high_threshold
            ),
        });
    }
    let w = &config.voice.pitch.wsola;
    if w.hop_ms >= w.window_ms {
        return Err(PipelineError::Config {
            path: "voice.pitch.wsola.hop_ms".into(),
            message: format!("hop {} must be shorter than window {}", w.hop_ms, w.window_ms),
        });
    }
    config.hiding.validate().map_err(|e| PipelineError::Config {
        path: "hiding".into(),
        message: e.to_string(),
    })?;
    config.voice.validate().map_err(|e| PipelineError::Config {
        path: "voice".into(),
        message: e.to_string(),
    })?;
    Ok(config)
}

pub fn validate_config_str(text: &str) -> Result<MaskingConfig, PipelineError> {
    let value: Value = serde_json::from_str(text).map_err(|e| PipelineError::Config {
        path: String::new(),
        message: format!("not JSON: {e}"),
    })?;
    validate_config(&value)
}

/// Recursively merges `overlay` into `base`: objects merge key by key,
/// everything else (arrays included) is replaced.
pub fn deep_merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub config: Value,
}

/// Named configurations. The bundled set is always valid.
#[derive(Debug, Clone)]
pub struct PresetStore {
    presets: Vec<Preset>,
}

impl PresetStore {
    pub fn builtin() -> Self {
        let presets: Vec<Preset> = serde_json::from_str(PRESETS_TEXT).expect("bundled presets are JSON");
        Self::new(presets).expect("bundled presets are valid")
    }

    pub fn new(presets: Vec<Preset>) -> Result<Self, PipelineError> {
        for (i, p) in presets.iter().enumerate() {
            if presets[..i].iter().any(|q| q.name == p.name) {
                return Err(PipelineError::Parameter(format!("duplicate preset name {:?}", p.name)));
            }
            validate_config(&p.config)?;
        }
        Ok(Self { presets })
    }

    pub fn list(&self) -> &[Preset] {
        &self.presets
    }

    pub fn get(&self, name: &str) -> Option<&Preset> {
        self.presets.iter().find(|p| p.name == name)
    }

    /// Preset config with `overrides` deep-merged on top, re-validated.
    pub fn resolve(&self, name: &str, overrides: Option<&Value>) -> Result<MaskingConfig, PipelineError> {
        let preset = self
            .get(name)
            .ok_or_else(|| PipelineError::NotFound(format!("preset {name:?}")))?;
        let mut doc = preset.config.clone();
        if let Some(o) = overrides {
            deep_merge(&mut doc, o);
        }
        validate_config(&doc)
    }
}
