//! Autoregressive world-model contract and reference implementations.
//!
//! The reference models carry hidden ground-truth state. They are metric
//! calibrators with known stability, not fair world models: [`OracleModel`]
//! is perfectly stable, [`DriftModel`] corrupts its hidden state in
//! controlled ways, [`FrozenModel`] ignores actions and [`NoisyModel`] adds
//! pixel noise on top of the oracle.

mod reference;

use std::sync::Arc;

use thiserror::Error;

use crate::action::Action;
use crate::env::{EnvError, MazeMap, Pose, RenderConfig};
use crate::frame::{Frame, FrameError};
use crate::rng::Rng;

pub use reference::{DriftModel, DriftParams, FrozenModel, NoisyModel, OracleModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("model needs at least one context frame")]
    EmptyContext,
    #[error("model was not reset for an episode before predicting")]
    NotInitialized,
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("context shape mismatch: {0}")]
    Shape(String),
}

/// Ground truth handed to a model at the start of each episode. Only the
/// reference models look at it.
#[derive(Debug, Clone)]
pub struct EpisodeInit {
    pub map: Arc<MazeMap>,
    pub start: Pose,
    pub render: RenderConfig,
}

/// An autoregressive next-frame generator.
///
/// `predict` receives at most [`WorldModel::context_len`] most recent frames
/// (oldest first) with the actions that produced them, plus the action to
/// apply next. Identical inputs and an identically seeded `rng` must yield
/// an identical frame.
pub trait WorldModel: Send {
    fn name(&self) -> String;

    /// Number of past (frame, action) pairs consumed per prediction.
    fn context_len(&self) -> usize;

    fn reset(&mut self, init: &EpisodeInit) -> Result<(), ModelError>;

    fn predict(
        &mut self,
        frames: &[Frame],
        actions: &[Action],
        next: Action,
        rng: &mut Rng,
    ) -> Result<Frame, ModelError>;

    /// Maps a real observation into this model's output space (for example
    /// the resolution and color depth it generates at) so that generated
    /// frames are compared against a like-for-like initial frame.
    fn observe(&self, frame: &Frame) -> Frame {
        frame.clone()
    }
}

/// Creates a fresh model instance per episode.
pub trait ModelFactory: Sync {
    fn build(&self) -> Box<dyn WorldModel>;

    fn describe(&self) -> String {
        self.build().name()
    }
}

impl<F> ModelFactory for F
where
    F: Fn() -> Box<dyn WorldModel> + Sync,
{
    fn build(&self) -> Box<dyn WorldModel> {
        self()
    }
}
