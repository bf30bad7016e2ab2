//! Mini-batch training with Adam, and inverse-embedding fine-tuning.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{Provenance, TransitionDataset};
use super::denoiser::{Conditioning, Denoiser, Gradients, ParamGroup, TrainSample};
use super::DiffusionError;
use crate::rng::{episode_rng, Rng};

/// Stream ids carved out of the training seed.
const SHUFFLE_STREAM: u64 = 0;
const INVERSE_INIT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Standard deviation of the freshly created inverse table.
    pub inverse_init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
            inverse_init_scale: 0.01,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), DiffusionError> {
        if self.batch_size == 0 || !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(DiffusionError::InvalidConfig(
                "batch_size must be positive and lr a positive finite number".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub loss_curve: Vec<f64>,
    pub steps: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.loss_curve.last().copied()
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &Denoiser) -> Self {
        let sizes: Vec<usize> = ParamGroup::ALL
            .iter()
            .map(|&g| model.params(g).map_or(0, |p| p.len()))
            .collect();
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut Denoiser, g: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (i, &group) in ParamGroup::ALL.iter().enumerate() {
            let Some(p) = model.params_mut(group) else { continue };
            let grad = g.group(group);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..p.len() {
                m[k] = Self::B1 * m[k] + (1.0 - Self::B1) * grad[k];
                v[k] = Self::B2 * v[k] + (1.0 - Self::B2) * grad[k] * grad[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// A dataset item converted to model space.
struct Prepared {
    context: Vec<f64>,
    target: Vec<f64>,
    cond: Conditioning,
}

fn prepare(ds: &TransitionDataset, irp: bool) -> Vec<Prepared> {
    let ms = |v: &[f32]| v.iter().map(|&p| 2.0 * p as f64 - 1.0).collect::<Vec<_>>();
    ds.items
        .iter()
        .map(|t| Prepared {
            context: ms(&t.context),
            target: ms(&t.target),
            cond: match (irp, t.provenance) {
                (true, Provenance::Rewound) => Conditioning::InverseOf(t.original_action()),
                _ => Conditioning::Action(t.action),
            },
        })
        .collect()
}

fn check_shapes(model: &Denoiser, ds: &TransitionDataset) -> Result<(), DiffusionError> {
    let cfg = model.config();
    if ds.frame_side != cfg.frame_side || ds.context != cfg.context {
        return Err(DiffusionError::DimensionMismatch(format!(
            "dataset is {}x{} with context {}, model expects {}x{} with context {}",
            ds.frame_side, ds.frame_side, ds.context, cfg.frame_side, cfg.frame_side, cfg.context
        )));
    }
    Ok(())
}

fn run(
    model: &mut Denoiser,
    ds: &TransitionDataset,
    cfg: &TrainConfig,
    irp: bool,
) -> Result<TrainReport, DiffusionError> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(DiffusionError::EmptyDataset);
    }
    check_shapes(model, ds)?;
    let data = prepare(ds, irp);
    let d = model.config().frame_dim();
    let k = model.schedule().steps();
    let mut rng = episode_rng(cfg.seed, SHUFFLE_STREAM);
    let mut adam = Adam::new(model);
    let mut grads = model.zero_gradients();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut eps_buf = vec![0.0; cfg.batch_size * d];
    let mut ts = vec![0usize; cfg.batch_size];
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            for (i, _) in chunk.iter().enumerate() {
                ts[i] = rng.random_range(1..=k);
                for e in &mut eps_buf[i * d..(i + 1) * d] {
                    *e = StandardNormal.sample(&mut rng);
                }
            }
            let samples: Vec<TrainSample<'_>> = chunk
                .iter()
                .enumerate()
                .map(|(i, &idx)| TrainSample {
                    target: &data[idx].target,
                    context: &data[idx].context,
                    t: ts[i],
                    eps: &eps_buf[i * d..(i + 1) * d],
                    cond: data[idx].cond,
                })
                .collect();
            let loss = model.accumulate(&samples, &mut grads)?;
            if !loss.is_finite() {
                return Err(DiffusionError::NonFiniteLoss { epoch, batch, loss });
            }
            adam.step(model, &grads, cfg.lr);
            epoch_loss += loss;
            batches += 1;
            steps += 1;
        }
        curve.push(epoch_loss / batches as f64);
    }
    Ok(TrainReport {
        loss_curve: curve,
        steps,
    })
}

/// Trains with plain forward-action conditioning on every item.
pub fn train(
    model: &mut Denoiser,
    ds: &TransitionDataset,
    cfg: &TrainConfig,
) -> Result<TrainReport, DiffusionError> {
    run(model, ds, cfg, false)
}

/// Continues training with rewound items conditioned on the inverse table.
/// Creates the inverse table if the model has none; all weights stay
/// trainable. Optimizer state starts fresh.
pub fn finetune_irp(
    model: &mut Denoiser,
    ds: &TransitionDataset,
    cfg: &TrainConfig,
) -> Result<TrainReport, DiffusionError> {
    let mut init_rng = episode_rng(cfg.seed, INVERSE_INIT_STREAM);
    if !(cfg.inverse_init_scale > 0.0 && cfg.inverse_init_scale.is_finite()) {
        return Err(DiffusionError::InvalidConfig(
            "inverse_init_scale must be positive".into(),
        ));
    }
    model.ensure_inverse_embeddings(&mut init_rng, cfg.inverse_init_scale);
    run(model, ds, cfg, true)
}

/// One-step epsilon MSE over every item and every diffusion step, with
/// noise drawn from `seed`. Items are always conditioned on their own
/// action through the forward table, as a sampler would.
pub fn heldout_eps_mse(model: &Denoiser, ds: &TransitionDataset, seed: u64) -> Result<f64, DiffusionError> {
    if ds.is_empty() {
        return Err(DiffusionError::EmptyDataset);
    }
    check_shapes(model, ds)?;
    let data = prepare(ds, false);
    let d = model.config().frame_dim();
    let k = model.schedule().steps();
    let mut rng: Rng = episode_rng(seed, 0);
    let mut total = 0.0;
    let mut eps = vec![0.0; d];
    for item in &data {
        for t in 1..=k {
            eps.iter_mut().for_each(|e| *e = StandardNormal.sample(&mut rng));
            total += model.loss(&[TrainSample {
                target: &item.target,
                context: &item.context,
                t,
                eps: &eps,
                cond: item.cond,
            }])?;
        }
    }
    Ok(total / (data.len() * k) as f64)
}
