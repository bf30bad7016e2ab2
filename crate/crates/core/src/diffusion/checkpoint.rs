//! JSON checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::denoiser::{Denoiser, DenoiserConfig};
use super::schedule::ScheduleParams;
use super::DiffusionError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMetadata {
    /// Total epochs seen, including fine-tuning.
    pub epochs: usize,
    pub seed: u64,
    pub dataset_hash: String,
    #[serde(default)]
    pub irp_epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Denoiser,
    pub metadata: CheckpointMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Shapes {
    frame_side: usize,
    context: usize,
    hidden: usize,
    embed_dim: usize,
    time_dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Weights {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Embeddings {
    forward: Vec<f64>,
    inverse: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: u32,
    schedule: ScheduleParams,
    shapes: Shapes,
    weights: Weights,
    embeddings: Embeddings,
    metadata: CheckpointMetadata,
}

impl Checkpoint {
    pub fn new(model: Denoiser, metadata: CheckpointMetadata) -> Self {
        Self { model, metadata }
    }

    pub fn to_json(&self) -> String {
        let m = &self.model;
        let c = m.config();
        let doc = Document {
            version: CHECKPOINT_VERSION,
            schedule: c.schedule,
            shapes: Shapes {
                frame_side: c.frame_side,
                context: c.context,
                hidden: c.hidden,
                embed_dim: c.embed_dim,
                time_dim: c.time_dim,
            },
            weights: Weights {
                w1: m.w1.clone(),
                b1: m.b1.clone(),
                w2: m.w2.clone(),
                b2: m.b2.clone(),
            },
            embeddings: Embeddings {
                forward: m.embed.clone(),
                inverse: m.inverse_embed.clone(),
            },
            metadata: self.metadata.clone(),
        };
        serde_json::to_string(&doc).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, DiffusionError> {
        let corrupt = |e: serde_json::Error| DiffusionError::CorruptCheckpoint(e.to_string());
        let value: serde_json::Value = serde_json::from_str(s).map_err(corrupt)?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| DiffusionError::CorruptCheckpoint("missing version".into()))?;
        if version != CHECKPOINT_VERSION as u64 {
            return Err(DiffusionError::VersionMismatch {
                found: version.min(u32::MAX as u64) as u32,
                expected: CHECKPOINT_VERSION,
            });
        }
        let doc: Document = serde_json::from_value(value).map_err(corrupt)?;
        let cfg = DenoiserConfig {
            frame_side: doc.shapes.frame_side,
            context: doc.shapes.context,
            hidden: doc.shapes.hidden,
            embed_dim: doc.shapes.embed_dim,
            time_dim: doc.shapes.time_dim,
            schedule: doc.schedule,
        };
        cfg.validate()
            .map_err(|e| DiffusionError::CorruptCheckpoint(e.to_string()))?;
        let w = doc.weights;
        let model = Denoiser::from_parts(
            cfg,
            w.w1,
            w.b1,
            w.w2,
            w.b2,
            doc.embeddings.forward,
            doc.embeddings.inverse,
        )?;
        Ok(Self {
            model,
            metadata: doc.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), DiffusionError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| DiffusionError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, DiffusionError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| DiffusionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    /// SHA-256 of the serialized checkpoint.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
