//! Toy denoising-diffusion world model over 16x16 grayscale frames.
//!
//! Frames enter the network in "model space" (`2p - 1`, roughly `[-1, 1]`).
//! The denoiser predicts the injected noise; sampling runs the ancestral DDPM
//! recursion and optionally a refinement pass that re-noises the first
//! estimate and denoises it again.

mod checkpoint;
mod dataset;
mod denoiser;
mod heatmap;
mod sample;
mod schedule;
mod train;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CheckpointMetadata, CHECKPOINT_VERSION};
pub use dataset::{
    augment_dataset, build_dataset, generate_episodes, rewind_schedule, Episode, FrameCache,
    Provenance, Transition, TransitionDataset,
};
pub use denoiser::{
    time_embedding, Conditioning, Denoiser, DenoiserConfig, Gradients, ParamGroup, TrainSample,
};
pub use heatmap::{embedding_heatmap, Heatmap, HEATMAP_ACTIONS};
pub use sample::{
    from_model_space, sample_base, sample_refine, to_model_space, DiffusionWorldModel,
    SamplerConfig, SamplerKind,
};
pub use schedule::{NoiseSchedule, ScheduleParams};
pub use train::{finetune_irp, heldout_eps_mse, train, TrainConfig, TrainReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffusionError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("refinement step {t_ref} outside 0..={steps}")]
    InvalidRefineStep { t_ref: usize, steps: usize },
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("episode {episode} step {step} collided and cannot be rewound")]
    NonInvertibleAction { episode: usize, step: usize },
    #[error("model has no inverse action embeddings")]
    MissingInverseEmbeddings,
    #[error("bad dataset: {0}")]
    Dataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<crate::env::EnvError> for DiffusionError {
    fn from(e: crate::env::EnvError) -> Self {
        DiffusionError::InvalidConfig(e.to_string())
    }
}
