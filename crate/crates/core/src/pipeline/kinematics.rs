use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::media::Rational;
use crate::overlay::LandmarkFrame;

pub const CSV_HEADER: [&str; 8] = ["frame", "person_id", "block", "point_index", "x", "y", "z", "visibility"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub width: u32,
    pub height: u32,
    pub fps: Rational,
    pub frame_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicsPerson {
    pub id: String,
    #[serde(flatten)]
    pub landmarks: LandmarkFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicsFrame {
    pub index: u64,
    pub persons: Vec<KinematicsPerson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicsDocument {
    pub video: VideoMeta,
    pub frames: Vec<KinematicsFrame>,
}

impl KinematicsDocument {
    /// Number of CSV data rows: one per landmark point.
    pub fn point_count(&self) -> usize {
        self.frames
            .iter()
            .flat_map(|f| &f.persons)
            .flat_map(|p| p.landmarks.blocks())
            .map(|(_, b)| b.len())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KinematicsFormat {
    Json,
    Csv,
}

impl FromStr for KinematicsFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(PipelineError::Parameter(format!("unknown kinematics format {other:?}"))),
        }
    }
}

pub fn export_kinematics(doc: &KinematicsDocument, format: KinematicsFormat) -> Result<String, PipelineError> {
    match format {
        KinematicsFormat::Json => Ok(serde_json::to_string_pretty(doc).expect("document serializes")),
        KinematicsFormat::Csv => kinematics_csv(doc),
    }
}

fn kinematics_csv(doc: &KinematicsDocument) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| PipelineError::Parameter(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for frame in &doc.frames {
        let index = frame.index.to_string();
        for person in &frame.persons {
            for (block, points) in person.landmarks.blocks() {
                for (i, p) in points.iter().enumerate() {
                    w.write_record([
                        index.as_str(),
                        person.id.as_str(),
                        block,
                        &i.to_string(),
                        &p.x.to_string(),
                        &p.y.to_string(),
                        &p.z.to_string(),
                        &p.visibility.to_string(),
                    ])
                    .map_err(io)?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Parameter(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn import_kinematics_json(text: &str) -> Result<KinematicsDocument, PipelineError> {
    let doc: KinematicsDocument = serde_json::from_str(text)
        .map_err(|e| PipelineError::Parameter(format!("kinematics document: {e}")))?;
    for f in &doc.frames {
        for p in &f.persons {
            p.landmarks.validate().map_err(|(block, msg)| {
                PipelineError::Parameter(format!("frame {} person {:?} {block}: {msg}", f.index, p.id))
            })?;
        }
    }
    Ok(doc)
}
