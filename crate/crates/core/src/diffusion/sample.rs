//! Ancestral sampling, refinement sampling and the [`WorldModel`] adapter.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::denoiser::{Conditioning, Denoiser};
use super::DiffusionError;
use crate::action::Action;
use crate::frame::Frame;
use crate::model::{EpisodeInit, ModelError, WorldModel};
use crate::rng::Rng;

/// Side of the frames samplers hand back (nearest-neighbour upsampled).
pub const OUTPUT_SIDE: usize = 64;

pub fn to_model_space(gray: &[f64]) -> Vec<f64> {
    gray.iter().map(|p| 2.0 * p - 1.0).collect()
}

pub fn from_model_space(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| ((v + 1.0) / 2.0).clamp(0.0, 1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Base,
    Refine,
}

/// Sampler choice. Unset refinement parameters take the schedule-consistent
/// defaults `t_ref = K / 2`, `sigma_ref = sqrt(1 - alpha_bar(t_ref))`.
///
/// Re-noising enters the loop at `t_ref` as
/// `sqrt(alpha_bar(t_ref)) * x0 + sigma_ref * eps`: adding noise to a clean
/// image in a variance-exploding parameterization is the same operation
/// expressed in this variance-preserving schedule. With the defaults it is
/// exactly the forward process `q_sample(x0, t_ref, eps)`. Set `additive`
/// to inject `x0 + sigma_ref * eps` unscaled instead.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub sigma_ref: Option<f64>,
    pub t_ref: Option<usize>,
    pub additive: bool,
}

impl SamplerConfig {
    pub fn refine() -> Self {
        Self {
            kind: SamplerKind::Refine,
            ..Self::default()
        }
    }

    /// Concrete `(sigma_ref, t_ref)` for a model.
    pub fn resolve(&self, model: &Denoiser) -> Result<(f64, usize), DiffusionError> {
        let k = model.schedule().steps();
        let t_ref = self.t_ref.unwrap_or(k / 2);
        if t_ref > k {
            return Err(DiffusionError::InvalidRefineStep { t_ref, steps: k });
        }
        let sigma = self
            .sigma_ref
            .unwrap_or_else(|| (1.0 - model.schedule().alpha_bar(t_ref)).sqrt());
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(DiffusionError::InvalidConfig(format!(
                "sigma_ref must be finite and non-negative, got {sigma}"
            )));
        }
        Ok((sigma, t_ref))
    }
}

fn gaussian(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Runs the reverse recursion from `x` at step `from` down to step 1.
/// `from = 0` returns `x` unchanged.
fn denoise(
    model: &Denoiser,
    mut x: Vec<f64>,
    from: usize,
    context: &[f64],
    action: Action,
    rng: &mut Rng,
) -> Result<Vec<f64>, DiffusionError> {
    let s = model.schedule();
    for t in (1..=from).rev() {
        let eps = model.predict_eps(&x, context, t, Conditioning::Action(action))?;
        let (beta, alpha, ab) = (s.beta(t), s.alpha(t), s.alpha_bar(t));
        let coef = beta / (1.0 - ab).sqrt();
        let inv_sqrt_alpha = 1.0 / alpha.sqrt();
        let z = if t > 1 { gaussian(rng, x.len()) } else { vec![0.0; x.len()] };
        let sd = beta.sqrt();
        for ((xi, ei), zi) in x.iter_mut().zip(&eps).zip(&z) {
            *xi = (*xi - coef * ei) * inv_sqrt_alpha + sd * zi;
        }
    }
    Ok(x)
}

fn model_context(model: &Denoiser, frames: &[Frame]) -> Result<Vec<f64>, DiffusionError> {
    let cfg = model.config();
    if frames.len() != cfg.context {
        return Err(DiffusionError::DimensionMismatch(format!(
            "sampler needs {} context frames, got {}",
            cfg.context,
            frames.len()
        )));
    }
    let mut ctx = Vec::with_capacity(cfg.context * cfg.frame_dim());
    for f in frames {
        let g = f
            .to_gray(cfg.frame_side)
            .map_err(|e| DiffusionError::DimensionMismatch(e.to_string()))?;
        ctx.extend(to_model_space(&g));
    }
    Ok(ctx)
}

fn base_model_space(
    model: &Denoiser,
    context: &[f64],
    action: Action,
    rng: &mut Rng,
) -> Result<Vec<f64>, DiffusionError> {
    let x_t = gaussian(rng, model.config().frame_dim());
    let x0 = denoise(model, x_t, model.schedule().steps(), context, action, rng)?;
    Ok(x0.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

fn to_frame(model: &Denoiser, x: &[f64]) -> Frame {
    let side = model.config().frame_side;
    Frame::from_gray(&from_model_space(x), side, OUTPUT_SIDE, OUTPUT_SIDE)
        .expect("output side is a multiple of the model side")
}

/// Ancestral DDPM sample of the next frame. `context` holds exactly
/// `model.config().context` frames, oldest first; the context actions are
/// accepted for interface symmetry but the denoiser conditions only on
/// `action`.
pub fn sample_base(
    model: &Denoiser,
    context: &[Frame],
    _context_actions: &[Action],
    action: Action,
    rng: &mut Rng,
) -> Result<Frame, DiffusionError> {
    let ctx = model_context(model, context)?;
    Ok(to_frame(model, &base_model_space(model, &ctx, action, rng)?))
}

/// Base sample `x0`, re-noised to step `t_ref` (see [`SamplerConfig`]) and
/// denoised again from there. `t_ref = 0` skips the second pass.
pub fn sample_refine(
    model: &Denoiser,
    context: &[Frame],
    _context_actions: &[Action],
    action: Action,
    rng: &mut Rng,
    sigma_ref: f64,
    t_ref: usize,
) -> Result<Frame, DiffusionError> {
    let cfg = SamplerConfig {
        kind: SamplerKind::Refine,
        sigma_ref: Some(sigma_ref),
        t_ref: Some(t_ref),
        additive: false,
    };
    let ctx = model_context(model, context)?;
    let x = refine_model_space(model, &ctx, action, rng, &cfg)?;
    Ok(to_frame(model, &x))
}

fn refine_model_space(
    model: &Denoiser,
    ctx: &[f64],
    action: Action,
    rng: &mut Rng,
    cfg: &SamplerConfig,
) -> Result<Vec<f64>, DiffusionError> {
    let (sigma, t_ref) = cfg.resolve(model)?;
    let x0 = base_model_space(model, ctx, action, rng)?;
    let noise = gaussian(rng, x0.len());
    let scale = if cfg.additive {
        1.0
    } else {
        model.schedule().alpha_bar(t_ref).sqrt()
    };
    let noisy: Vec<f64> = x0
        .iter()
        .zip(&noise)
        .map(|(x, e)| scale * x + sigma * e)
        .collect();
    let out = denoise(model, noisy, t_ref, ctx, action, rng)?;
    Ok(out.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

/// A trained denoiser behind the [`WorldModel`] interface. The weights are
/// shared; each instance is cheap to create per episode.
#[derive(Debug, Clone)]
pub struct DiffusionWorldModel {
    model: Arc<Denoiser>,
    sampler: SamplerConfig,
    label: String,
}

impl DiffusionWorldModel {
    pub fn new(model: Arc<Denoiser>, sampler: SamplerConfig) -> Result<Self, DiffusionError> {
        sampler.resolve(&model)?;
        let label = match sampler.kind {
            SamplerKind::Base => format!("diffusion(C={})", model.config().context),
            SamplerKind::Refine => format!("diffusion(C={},refine)", model.config().context),
        };
        Ok(Self { model, sampler, label })
    }

    pub fn denoiser(&self) -> &Denoiser {
        &self.model
    }

    pub fn sampler(&self) -> SamplerConfig {
        self.sampler
    }
}

fn to_model_error(e: DiffusionError) -> ModelError {
    match e {
        DiffusionError::DimensionMismatch(m) => ModelError::Shape(m),
        other => ModelError::InvalidParams(other.to_string()),
    }
}

impl WorldModel for DiffusionWorldModel {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn context_len(&self) -> usize {
        self.model.config().context
    }

    fn reset(&mut self, _init: &EpisodeInit) -> Result<(), ModelError> {
        Ok(())
    }

    /// Uses the most recent `context_len` frames; shorter histories are
    /// padded at the front by repeating the oldest frame, as in training.
    fn predict(
        &mut self,
        frames: &[Frame],
        _actions: &[Action],
        next: Action,
        rng: &mut Rng,
    ) -> Result<Frame, ModelError> {
        let c = self.context_len();
        let first = frames.first().ok_or(ModelError::EmptyContext)?;
        let recent = &frames[frames.len().saturating_sub(c)..];
        let mut ctx_frames: Vec<Frame> = vec![first.clone(); c - recent.len()];
        ctx_frames.extend(recent.iter().cloned());
        let ctx = model_context(&self.model, &ctx_frames).map_err(to_model_error)?;
        let x = match self.sampler.kind {
            SamplerKind::Base => base_model_space(&self.model, &ctx, next, rng),
            SamplerKind::Refine => refine_model_space(&self.model, &ctx, next, rng, &self.sampler),
        }
        .map_err(to_model_error)?;
        Ok(to_frame(&self.model, &x))
    }

    /// Real frames are reduced to the model's grayscale resolution and
    /// upsampled back, so they live in the same space as generated frames.
    fn observe(&self, frame: &Frame) -> Frame {
        let side = self.model.config().frame_side;
        match frame.to_gray(side) {
            Ok(g) => Frame::from_gray(&g, side, OUTPUT_SIDE, OUTPUT_SIDE)
                .expect("output side is a multiple of the model side"),
            Err(_) => frame.clone(),
        }
    }
}
