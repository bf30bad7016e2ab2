//! Two-layer dense epsilon-predictor.
//!
//! Input layout: `[noisy target (D) | context frames (C*D) | time (T) | action (E)]`.
//! `eps_hat = W2 tanh(W1 x + b1) + b2`.

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::schedule::{NoiseSchedule, ScheduleParams};
use super::DiffusionError;
use crate::action::Action;
use crate::rng::Rng;

const ACTIONS: usize = Action::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserConfig {
    /// Model frames are `frame_side x frame_side` grayscale.
    pub frame_side: usize,
    pub context: usize,
    pub hidden: usize,
    pub embed_dim: usize,
    pub time_dim: usize,
    pub schedule: ScheduleParams,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            frame_side: 16,
            context: 4,
            hidden: 256,
            embed_dim: 8,
            time_dim: 8,
            schedule: ScheduleParams::default(),
        }
    }
}

impl DenoiserConfig {
    pub fn frame_dim(&self) -> usize {
        self.frame_side * self.frame_side
    }

    pub fn input_dim(&self) -> usize {
        self.frame_dim() * (1 + self.context) + self.time_dim + self.embed_dim
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if self.frame_side == 0 || self.context == 0 || self.hidden == 0 || self.embed_dim == 0 {
            return Err(DiffusionError::InvalidConfig(
                "frame_side, context, hidden and embed_dim must be positive".into(),
            ));
        }
        if self.time_dim == 0 || self.time_dim % 2 != 0 {
            return Err(DiffusionError::InvalidConfig("time_dim must be a positive even number".into()));
        }
        NoiseSchedule::new(self.schedule)?;
        Ok(())
    }
}

/// Which embedding table conditions a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Row of the forward table `E`. The only mode samplers use.
    Action(Action),
    /// Row of the inverse table `E_inv`, indexed by the original action whose
    /// effect is being undone. Training only.
    InverseOf(Action),
}

/// Parameter groups, in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    W1,
    B1,
    W2,
    B2,
    Embed,
    InverseEmbed,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 6] = [
        ParamGroup::W1,
        ParamGroup::B1,
        ParamGroup::W2,
        ParamGroup::B2,
        ParamGroup::Embed,
        ParamGroup::InverseEmbed,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoiser {
    cfg: DenoiserConfig,
    schedule: NoiseSchedule,
    /// `hidden x input_dim`, row-major.
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    /// `frame_dim x hidden`, row-major.
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
    /// `ACTIONS x embed_dim`, indexed by [`Action::index`].
    pub(crate) embed: Vec<f64>,
    pub(crate) inverse_embed: Option<Vec<f64>>,
}

/// Gradient buffers shaped like a [`Denoiser`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub embed: Vec<f64>,
    pub inverse_embed: Vec<f64>,
}

impl Gradients {
    pub fn group(&self, g: ParamGroup) -> &[f64] {
        match g {
            ParamGroup::W1 => &self.w1,
            ParamGroup::B1 => &self.b1,
            ParamGroup::W2 => &self.w2,
            ParamGroup::B2 => &self.b2,
            ParamGroup::Embed => &self.embed,
            ParamGroup::InverseEmbed => &self.inverse_embed,
        }
    }

    fn zero(&mut self) {
        for v in [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.embed,
            &mut self.inverse_embed,
        ] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// One training example in model space (values roughly in `[-1, 1]`).
#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub target: &'a [f64],
    pub context: &'a [f64],
    pub t: usize,
    pub eps: &'a [f64],
    pub cond: Conditioning,
}

/// Sinusoidal embedding of the integer diffusion step.
pub fn time_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = Vec::with_capacity(dim);
    for i in 0..half {
        let freq = 1.0 / 10_000f64.powf(i as f64 / half as f64);
        let arg = t as f64 * freq;
        out.push(arg.sin());
        out.push(arg.cos());
    }
    out
}

/// Dot product with independent partial sums, which lets the compiler
/// vectorize the reduction.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

/// Gaussian rows made orthogonal by Gram-Schmidt (when `rows <= cols`) and
/// rescaled to norm `sqrt(cols)`, so no two actions start out similar.
fn orthogonal_rows(rng: &mut Rng, rows: usize, cols: usize) -> Vec<f64> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(rng)).collect();
        if out.len() < cols {
            for u in &out {
                let p = dot(&v, u) / dot(u, u);
                axpy(-p, u, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x *= (cols as f64).sqrt() / norm);
        out.push(v);
    }
    out.concat()
}

fn xavier(rng: &mut Rng, rows: usize, cols: usize) -> Vec<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols).map(|_| rng.random_range(-a..a)).collect()
}

impl Denoiser {
    /// Freshly initialized model (Xavier-uniform weights, zero biases,
    /// mutually orthogonal forward embeddings of norm `sqrt(embed_dim)`, no
    /// inverse table).
    pub fn new(cfg: DenoiserConfig, rng: &mut Rng) -> Result<Self, DiffusionError> {
        cfg.validate()?;
        let schedule = NoiseSchedule::new(cfg.schedule)?;
        let (d, i, h) = (cfg.frame_dim(), cfg.input_dim(), cfg.hidden);
        let w1 = xavier(rng, h, i);
        let w2 = xavier(rng, d, h);
        let embed = orthogonal_rows(rng, ACTIONS, cfg.embed_dim);
        Ok(Self {
            cfg,
            schedule,
            w1,
            b1: vec![0.0; h],
            w2,
            b2: vec![0.0; d],
            embed,
            inverse_embed: None,
        })
    }

    pub(crate) fn from_parts(
        cfg: DenoiserConfig,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
        embed: Vec<f64>,
        inverse_embed: Option<Vec<f64>>,
    ) -> Result<Self, DiffusionError> {
        cfg.validate()?;
        let (d, i, h, e) = (cfg.frame_dim(), cfg.input_dim(), cfg.hidden, cfg.embed_dim);
        let check = |name: &str, v: &[f64], n: usize| {
            if v.len() != n {
                return Err(DiffusionError::CorruptCheckpoint(format!(
                    "{name} has {} values, expected {n}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(DiffusionError::CorruptCheckpoint(format!("{name} is not finite")));
            }
            Ok(())
        };
        check("w1", &w1, h * i)?;
        check("b1", &b1, h)?;
        check("w2", &w2, d * h)?;
        check("b2", &b2, d)?;
        check("embed", &embed, ACTIONS * e)?;
        if let Some(inv) = &inverse_embed {
            check("inverse_embed", inv, ACTIONS * e)?;
        }
        Ok(Self {
            schedule: NoiseSchedule::new(cfg.schedule)?,
            cfg,
            w1,
            b1,
            w2,
            b2,
            embed,
            inverse_embed,
        })
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.cfg
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn embedding(&self, a: Action) -> &[f64] {
        let e = self.cfg.embed_dim;
        &self.embed[a.index() * e..(a.index() + 1) * e]
    }

    pub fn inverse_embedding(&self, a: Action) -> Option<&[f64]> {
        let e = self.cfg.embed_dim;
        self.inverse_embed
            .as_ref()
            .map(|t| &t[a.index() * e..(a.index() + 1) * e])
    }

    pub fn has_inverse_embeddings(&self) -> bool {
        self.inverse_embed.is_some()
    }

    /// Adds the inverse table if missing, drawn from `N(0, scale^2)`.
    pub fn ensure_inverse_embeddings(&mut self, rng: &mut Rng, scale: f64) {
        if self.inverse_embed.is_none() {
            let normal = Normal::new(0.0, scale).expect("finite scale");
            self.inverse_embed = Some(
                (0..ACTIONS * self.cfg.embed_dim)
                    .map(|_| normal.sample(rng))
                    .collect(),
            );
        }
    }

    pub fn set_inverse_embeddings(&mut self, table: Option<Vec<f64>>) -> Result<(), DiffusionError> {
        if let Some(t) = &table {
            if t.len() != ACTIONS * self.cfg.embed_dim {
                return Err(DiffusionError::DimensionMismatch(format!(
                    "inverse table has {} values, expected {}",
                    t.len(),
                    ACTIONS * self.cfg.embed_dim
                )));
            }
        }
        self.inverse_embed = table;
        Ok(())
    }

    pub fn params(&self, g: ParamGroup) -> Option<&[f64]> {
        Some(match g {
            ParamGroup::W1 => &self.w1,
            ParamGroup::B1 => &self.b1,
            ParamGroup::W2 => &self.w2,
            ParamGroup::B2 => &self.b2,
            ParamGroup::Embed => &self.embed,
            ParamGroup::InverseEmbed => return self.inverse_embed.as_deref(),
        })
    }

    pub fn params_mut(&mut self, g: ParamGroup) -> Option<&mut [f64]> {
        Some(match g {
            ParamGroup::W1 => &mut self.w1,
            ParamGroup::B1 => &mut self.b1,
            ParamGroup::W2 => &mut self.w2,
            ParamGroup::B2 => &mut self.b2,
            ParamGroup::Embed => &mut self.embed,
            ParamGroup::InverseEmbed => return self.inverse_embed.as_deref_mut(),
        })
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
            embed: vec![0.0; self.embed.len()],
            inverse_embed: vec![0.0; self.embed.len()],
        }
    }

    fn cond_vector(&self, cond: Conditioning) -> Result<&[f64], DiffusionError> {
        match cond {
            Conditioning::Action(a) => Ok(self.embedding(a)),
            Conditioning::InverseOf(a) => self
                .inverse_embedding(a)
                .ok_or(DiffusionError::MissingInverseEmbeddings),
        }
    }

    fn assemble_input(
        &self,
        noisy: &[f64],
        context: &[f64],
        t: usize,
        cond: Conditioning,
        x: &mut Vec<f64>,
    ) -> Result<(), DiffusionError> {
        let d = self.cfg.frame_dim();
        if noisy.len() != d || context.len() != d * self.cfg.context {
            return Err(DiffusionError::DimensionMismatch(format!(
                "expected target {d} and context {}, got {} and {}",
                d * self.cfg.context,
                noisy.len(),
                context.len()
            )));
        }
        x.clear();
        x.extend_from_slice(noisy);
        x.extend_from_slice(context);
        x.extend(time_embedding(t, self.cfg.time_dim));
        x.extend_from_slice(self.cond_vector(cond)?);
        Ok(())
    }

    fn hidden_layer(&self, x: &[f64], h: &mut [f64]) {
        let n = x.len();
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * n..(j + 1) * n];
            *hj = (dot(row, x) + self.b1[j]).tanh();
        }
    }

    fn output_layer(&self, h: &[f64], out: &mut [f64]) {
        let hd = h.len();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.w2[k * hd..(k + 1) * hd];
            *o = dot(row, h) + self.b2[k];
        }
    }

    /// Predicted noise for a noisy target at step `t`.
    pub fn predict_eps(
        &self,
        noisy: &[f64],
        context: &[f64],
        t: usize,
        cond: Conditioning,
    ) -> Result<Vec<f64>, DiffusionError> {
        let mut x = Vec::with_capacity(self.cfg.input_dim());
        self.assemble_input(noisy, context, t, cond, &mut x)?;
        let mut h = vec![0.0; self.cfg.hidden];
        self.hidden_layer(&x, &mut h);
        let mut out = vec![0.0; self.cfg.frame_dim()];
        self.output_layer(&h, &mut out);
        Ok(out)
    }

    /// Mean squared epsilon error over `samples` (averaged over samples and
    /// pixels), without gradients.
    pub fn loss(&self, samples: &[TrainSample<'_>]) -> Result<f64, DiffusionError> {
        let d = self.cfg.frame_dim();
        let mut total = 0.0;
        for s in samples {
            let noisy = self.schedule.q_sample(s.target, s.t, s.eps)?;
            let pred = self.predict_eps(&noisy, s.context, s.t, s.cond)?;
            total += pred
                .iter()
                .zip(s.eps)
                .map(|(p, e)| (p - e) * (p - e))
                .sum::<f64>()
                / d as f64;
        }
        Ok(total / samples.len().max(1) as f64)
    }

    /// Loss and its gradient with respect to every parameter group.
    pub fn loss_and_grad(&self, samples: &[TrainSample<'_>]) -> Result<(f64, Gradients), DiffusionError> {
        let mut g = self.zero_gradients();
        let loss = self.accumulate(samples, &mut g)?;
        Ok((loss, g))
    }

    /// Overwrites `g` with the batch gradient and returns the batch loss.
    pub(crate) fn accumulate(
        &self,
        samples: &[TrainSample<'_>],
        g: &mut Gradients,
    ) -> Result<f64, DiffusionError> {
        g.zero();
        let (d, hd, n, e) = (
            self.cfg.frame_dim(),
            self.cfg.hidden,
            self.cfg.input_dim(),
            self.cfg.embed_dim,
        );
        let scale = 2.0 / (d * samples.len().max(1)) as f64;
        let mut x = Vec::with_capacity(n);
        let mut h = vec![0.0; hd];
        let mut out = vec![0.0; d];
        let mut dh = vec![0.0; hd];
        let mut total = 0.0;
        for s in samples {
            let noisy = self.schedule.q_sample(s.target, s.t, s.eps)?;
            self.assemble_input(&noisy, s.context, s.t, s.cond, &mut x)?;
            self.hidden_layer(&x, &mut h);
            self.output_layer(&h, &mut out);

            dh.iter_mut().for_each(|v| *v = 0.0);
            let mut sq = 0.0;
            for k in 0..d {
                let r = out[k] - s.eps[k];
                sq += r * r;
                let dout = scale * r;
                g.b2[k] += dout;
                let w_row = &self.w2[k * hd..(k + 1) * hd];
                axpy(dout, &h, &mut g.w2[k * hd..(k + 1) * hd]);
                axpy(dout, w_row, &mut dh);
            }
            total += sq / d as f64;

            let emb_off = n - e;
            let (emb_grad, row) = match s.cond {
                Conditioning::Action(a) => (&mut g.embed, a.index()),
                Conditioning::InverseOf(a) => (&mut g.inverse_embed, a.index()),
            };
            for j in 0..hd {
                let dpre = dh[j] * (1.0 - h[j] * h[j]);
                if dpre == 0.0 {
                    continue;
                }
                g.b1[j] += dpre;
                axpy(dpre, &x, &mut g.w1[j * n..(j + 1) * n]);
                let w_row = &self.w1[j * n + emb_off..(j + 1) * n];
                for (k, w) in w_row.iter().enumerate() {
                    emb_grad[row * e + k] += dpre * w;
                }
            }
        }
        Ok(total / samples.len().max(1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn tiny() -> DenoiserConfig {
        DenoiserConfig {
            frame_side: 2,
            context: 1,
            hidden: 8,
            embed_dim: 8,
            time_dim: 8,
            schedule: ScheduleParams::default(),
        }
    }

    #[test]
    fn shapes() {
        let m = Denoiser::new(DenoiserConfig::default(), &mut seeded(0)).unwrap();
        assert_eq!(m.config().input_dim(), 256 * 5 + 16);
        let out = m
            .predict_eps(&[0.0; 256], &[0.0; 1024], 3, Conditioning::Action(Action::Forward))
            .unwrap();
        assert_eq!(out.len(), 256);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn inverse_conditioning_requires_table() {
        let m = Denoiser::new(tiny(), &mut seeded(0)).unwrap();
        assert_eq!(
            m.predict_eps(&[0.0; 4], &[0.0; 4], 1, Conditioning::InverseOf(Action::Forward)),
            Err(DiffusionError::MissingInverseEmbeddings)
        );
    }

    #[test]
    fn loss_matches_accumulated_loss() {
        let mut m = Denoiser::new(tiny(), &mut seeded(1)).unwrap();
        m.ensure_inverse_embeddings(&mut seeded(2), 0.5);
        let tgt = [0.1, -0.2, 0.3, 0.9];
        let ctx = [0.5, 0.5, -0.5, 0.0];
        let eps = [1.0, -1.0, 0.5, 0.2];
        let samples = [
            TrainSample { target: &tgt, context: &ctx, t: 3, eps: &eps, cond: Conditioning::Action(Action::TurnLeft) },
            TrainSample { target: &ctx, context: &tgt, t: 12, eps: &eps, cond: Conditioning::InverseOf(Action::Forward) },
        ];
        let (l, _) = m.loss_and_grad(&samples).unwrap();
        assert!((l - m.loss(&samples).unwrap()).abs() < 1e-14);
    }
}
