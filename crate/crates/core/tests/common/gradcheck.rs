//! Analytic denoiser gradients against central finite differences of an
//! independent forward pass written here from the layer definitions.

use wsbench::action::Action;
use wsbench::diffusion::{
    time_embedding, Conditioning, Denoiser, DenoiserConfig, ParamGroup, ScheduleParams, TrainSample,
};
use wsbench::rng::seeded;

fn tiny() -> DenoiserConfig {
    // D = 4, Hd = 8.
    DenoiserConfig {
        frame_side: 2,
        context: 2,
        hidden: 8,
        embed_dim: 8,
        time_dim: 8,
        schedule: ScheduleParams::default(),
    }
}

struct Case {
    target: Vec<f64>,
    context: Vec<f64>,
    eps: Vec<f64>,
    t: usize,
    cond: Conditioning,
}

/// Straight-line loss: mean over samples of mean squared epsilon error.
fn oracle_loss(m: &Denoiser, cases: &[Case]) -> f64 {
    let cfg = m.config();
    let s = m.schedule();
    let w1 = m.params(ParamGroup::W1).unwrap();
    let b1 = m.params(ParamGroup::B1).unwrap();
    let w2 = m.params(ParamGroup::W2).unwrap();
    let b2 = m.params(ParamGroup::B2).unwrap();
    let e = cfg.embed_dim;
    let mut total = 0.0;
    for c in cases {
        let ab = s.alpha_bar(c.t);
        let mut x: Vec<f64> = c
            .target
            .iter()
            .zip(&c.eps)
            .map(|(x0, n)| ab.sqrt() * x0 + (1.0 - ab).sqrt() * n)
            .collect();
        x.extend(&c.context);
        x.extend(time_embedding(c.t, cfg.time_dim));
        let (table, a) = match c.cond {
            Conditioning::Action(a) => (m.params(ParamGroup::Embed).unwrap(), a),
            Conditioning::InverseOf(a) => (m.params(ParamGroup::InverseEmbed).unwrap(), a),
        };
        x.extend(&table[a.index() * e..(a.index() + 1) * e]);
        let n = x.len();
        let h: Vec<f64> = (0..cfg.hidden)
            .map(|j| ((0..n).map(|i| w1[j * n + i] * x[i]).sum::<f64>() + b1[j]).tanh())
            .collect();
        let d = cfg.frame_dim();
        let mut sq = 0.0;
        for k in 0..d {
            let o = (0..cfg.hidden).map(|j| w2[k * cfg.hidden + j] * h[j]).sum::<f64>() + b2[k];
            sq += (o - c.eps[k]).powi(2);
        }
        total += sq / d as f64;
    }
    total / cases.len() as f64
}

pub struct GroupCheck {
    pub group: ParamGroup,
    /// Largest relative error over entries with a non-negligible gradient.
    pub worst: f64,
    pub nonzero: usize,
}

/// `(|analytic loss - oracle loss|, per-group finite-difference check)`
/// on a tiny model with both embedding tables in use.
pub fn check(h: f64) -> (f64, Vec<GroupCheck>) {
    let mut rng = seeded(2024);
    let mut m = Denoiser::new(tiny(), &mut rng).unwrap();
    m.ensure_inverse_embeddings(&mut rng, 0.7);
    let v = |k: usize, off: f64| -> Vec<f64> { (0..k).map(|i| ((i as f64 + off) * 0.77).sin()).collect() };
    let cases = vec![
        Case { target: v(4, 0.1), context: v(8, 1.3), eps: v(4, 2.9), t: 2, cond: Conditioning::Action(Action::TurnLeft) },
        Case { target: v(4, 3.3), context: v(8, 0.4), eps: v(4, 5.1), t: 9, cond: Conditioning::InverseOf(Action::Forward) },
        Case { target: v(4, 7.0), context: v(8, 6.2), eps: v(4, 0.6), t: 16, cond: Conditioning::Action(Action::Backward) },
        Case { target: v(4, 4.4), context: v(8, 8.8), eps: v(4, 1.7), t: 5, cond: Conditioning::InverseOf(Action::TurnRight) },
    ];
    let samples: Vec<TrainSample<'_>> = cases
        .iter()
        .map(|c| TrainSample { target: &c.target, context: &c.context, t: c.t, eps: &c.eps, cond: c.cond })
        .collect();
    let (loss, grads) = m.loss_and_grad(&samples).unwrap();
    let loss_gap = (loss - oracle_loss(&m, &cases)).abs();

    let mut out = Vec::new();
    for group in ParamGroup::ALL {
        let len = m.params(group).unwrap().len();
        let analytic = grads.group(group).to_vec();
        let mut worst: f64 = 0.0;
        let mut nonzero = 0;
        for i in 0..len {
            let orig = m.params(group).unwrap()[i];
            m.params_mut(group).unwrap()[i] = orig + h;
            let up = oracle_loss(&m, &cases);
            m.params_mut(group).unwrap()[i] = orig - h;
            let down = oracle_loss(&m, &cases);
            m.params_mut(group).unwrap()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[i];
            if fd.abs() > 1e-9 || a.abs() > 1e-9 {
                nonzero += 1;
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()));
            }
        }
        out.push(GroupCheck { group, worst, nonzero });
    }
    (loss_gap, out)
}
