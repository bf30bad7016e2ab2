//! End-to-end stability protocol: start sampling, ground-truth context,
//! autoregressive probe rollout, scoring, aggregation and ablations.
//!
//! Every episode draws all of its randomness (start pose and model
//! sampling) from its own stream of the master seed, so results do not
//! depend on how episodes are scheduled across threads.

mod report;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, ActionError, ActionSequence};
use crate::env::{render, sample_start, trace_poses, EnvError, MazeMap, Pose, RenderConfig};
use crate::frame::Frame;
use crate::metrics::{psnr, ws_from_distances, DistanceMetric, MetricError};
use crate::model::{EpisodeInit, ModelError, ModelFactory};
use crate::rng::episode_rng;

pub use report::{ablation_csv, episodes_csv, EPISODE_CSV_HEADER, ABLATION_CSV_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("no episode results to aggregate")]
    EmptyResults,
    #[error("episodes report different metric sets")]
    InconsistentMetrics,
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// The map and renderer episodes are played in.
#[derive(Debug, Clone)]
pub struct EvalEnv {
    pub map: Arc<MazeMap>,
    pub render: RenderConfig,
}

impl EvalEnv {
    pub fn new(map: MazeMap, render: RenderConfig) -> Self {
        Self {
            map: Arc::new(map),
            render,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    /// Probe half-length `N`.
    pub n: usize,
    pub action: Action,
    pub episodes: usize,
    /// Ground-truth frames handed to the model before generation starts.
    pub context: usize,
    pub metrics: Vec<DistanceMetric>,
    pub master_seed: u64,
    /// Keep generated frames in each [`EpisodeResult`].
    pub keep_frames: bool,
}

impl ProtocolConfig {
    pub fn new(action: Action, n: usize, episodes: usize) -> Self {
        Self {
            n,
            action,
            episodes,
            context: 4,
            metrics: vec![DistanceMetric::Mse],
            master_seed: 0,
            keep_frames: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n == 0 || self.episodes == 0 || self.context == 0 {
            return Err(HarnessError::InvalidConfig(
                "n, episodes and context must all be at least 1".into(),
            ));
        }
        if self.metrics.is_empty() {
            return Err(HarnessError::InvalidConfig("no metrics requested".into()));
        }
        Ok(())
    }

    pub fn probe(&self) -> Result<ActionSequence, HarnessError> {
        Ok(ActionSequence::probe(self.action, self.n)?)
    }
}

/// One metric's outcome on one episode. `ws` is `None` when the dynamics
/// were degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOutcome {
    pub metric: String,
    pub discrepancy: f64,
    pub dynamics: f64,
    pub ws: Option<f64>,
}

impl MetricOutcome {
    pub fn degenerate(&self) -> bool {
        self.ws.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode: usize,
    pub start: Pose,
    pub metrics: Vec<MetricOutcome>,
    /// PSNR between the initial frame and the final generated frame.
    pub psnr: f64,
    /// Whether the ground-truth probe from `start` collides anywhere.
    pub collision: bool,
    /// `2N + 1` frames: the observed `x1`, then every generated frame.
    #[serde(skip)]
    pub frames: Option<Vec<Frame>>,
}

/// Plays one episode of the protocol.
pub fn run_protocol(
    factory: &dyn ModelFactory,
    env: &EvalEnv,
    cfg: &ProtocolConfig,
    episode: usize,
) -> Result<EpisodeResult, HarnessError> {
    cfg.validate()?;
    let probe = cfg.probe()?;
    let mut rng = episode_rng(cfg.master_seed, episode as u64);
    let start = sample_start(&env.map, &mut rng, &probe)?;
    let (_, collisions) = trace_poses(&env.map, start, &probe);

    let mut model = factory.build();
    model.reset(&EpisodeInit {
        map: env.map.clone(),
        start,
        render: env.render.clone(),
    })?;

    // Ground-truth context: the start view held for `context` Noop steps.
    let x1 = model.observe(&render(&env.map, &start, &env.render));
    let mut frames = vec![x1.clone(); cfg.context];
    let mut actions = vec![Action::Noop; cfg.context];
    let window = model.context_len().max(1);
    for &a in probe.iter() {
        let from = frames.len().saturating_sub(window);
        let next = model.predict(&frames[from..], &actions[from..], a, &mut rng)?;
        frames.push(next);
        actions.push(a);
    }
    let generated = frames.split_off(cfg.context - 1);
    let xbar = &generated[cfg.n];
    let x1dag = &generated[2 * cfg.n];

    let mut metrics = Vec::with_capacity(cfg.metrics.len());
    for m in &cfg.metrics {
        let disc = m.distance(&x1, x1dag)?;
        let to_mid = m.distance(&x1, xbar)?;
        let back = m.distance(x1dag, xbar)?;
        let outcome = match ws_from_distances(&m.name(), disc, to_mid, back) {
            Ok(r) => MetricOutcome {
                metric: r.metric,
                discrepancy: r.discrepancy,
                dynamics: r.dynamics,
                ws: Some(r.ws),
            },
            Err(MetricError::DegenerateDynamics { sum }) => MetricOutcome {
                metric: m.name(),
                discrepancy: disc,
                dynamics: sum / 2.0,
                ws: None,
            },
            Err(e) => return Err(e.into()),
        };
        metrics.push(outcome);
    }
    Ok(EpisodeResult {
        episode,
        start,
        metrics,
        psnr: psnr(&x1, x1dag)?,
        collision: collisions.iter().any(|&c| c),
        frames: cfg.keep_frames.then_some(generated),
    })
}

/// Runs every episode on at most `jobs` threads; results are in episode
/// order and identical for any `jobs`.
pub fn run_episodes(
    factory: &dyn ModelFactory,
    env: &EvalEnv,
    cfg: &ProtocolConfig,
    jobs: usize,
) -> Result<Vec<EpisodeResult>, HarnessError> {
    cfg.validate()?;
    if jobs <= 1 {
        return (0..cfg.episodes)
            .map(|e| run_protocol(factory, env, cfg, e))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| {
        (0..cfg.episodes)
            .into_par_iter()
            .map(|e| run_protocol(factory, env, cfg, e))
            .collect()
    })
}

/// Mean and sample standard deviation; `None` for an empty slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Values are sorted first so the result does not depend on order.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() < 2 {
            0.0
        } else {
            let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            sq.sort_by(f64::total_cmp);
            (sq.iter().sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Stat { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub episodes: usize,
    pub degenerate: usize,
    /// Statistics over non-degenerate episodes; absent if all degenerate.
    pub ws: Option<Stat>,
    pub discrepancy: Option<Stat>,
    pub dynamics: Option<Stat>,
}

impl MetricSummary {
    pub fn all_degenerate(&self) -> bool {
        self.degenerate == self.episodes
    }
}

/// Per-metric statistics, in the order metrics were requested.
pub fn aggregate(results: &[EpisodeResult]) -> Result<Vec<MetricSummary>, HarnessError> {
    let first = results.first().ok_or(HarnessError::EmptyResults)?;
    let names: Vec<&str> = first.metrics.iter().map(|m| m.metric.as_str()).collect();
    for r in results {
        if r.metrics.len() != names.len()
            || r.metrics.iter().zip(&names).any(|(m, n)| m.metric != *n)
        {
            return Err(HarnessError::InconsistentMetrics);
        }
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let ok: Vec<&MetricOutcome> = results
                .iter()
                .map(|r| &r.metrics[i])
                .filter(|m| !m.degenerate())
                .collect();
            let col = |f: fn(&MetricOutcome) -> f64| Stat::of(&ok.iter().map(|m| f(m)).collect::<Vec<_>>());
            MetricSummary {
                metric: name.to_string(),
                episodes: results.len(),
                degenerate: results.len() - ok.len(),
                ws: col(|m| m.ws.unwrap_or(f64::NAN)),
                discrepancy: col(|m| m.discrepancy),
                dynamics: col(|m| m.dynamics),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    SequenceLength,
    ContextLength,
    /// 0 = base sampler, 1 = refinement sampler.
    RefineOnOff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub axis_value: usize,
    pub summary: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub axis: AblationAxis,
    pub points: Vec<AblationPoint>,
}

/// The protocol at each probe length in `ns` (sorted, shared seed).
pub fn ablate_seq_len(
    factory: &dyn ModelFactory,
    env: &EvalEnv,
    cfg: &ProtocolConfig,
    ns: &[usize],
    jobs: usize,
) -> Result<AblationResult, HarnessError> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(HarnessError::InvalidConfig(
            "sequence lengths must be a non-empty list of positive values".into(),
        ));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let points = ns
        .into_iter()
        .map(|n| {
            let c = ProtocolConfig { n, ..cfg.clone() };
            let results = run_episodes(factory, env, &c, jobs)?;
            Ok(AblationPoint {
                axis_value: n,
                summary: aggregate(&results)?,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(AblationResult {
        axis: AblationAxis::SequenceLength,
        points,
    })
}

/// One protocol run per model, keyed by its context length; each run also
/// hands the model that many ground-truth context frames.
pub fn ablate_context(
    models: &BTreeMap<usize, Box<dyn ModelFactory + Send>>,
    env: &EvalEnv,
    cfg: &ProtocolConfig,
    jobs: usize,
) -> Result<AblationResult, HarnessError> {
    if models.is_empty() {
        return Err(HarnessError::InvalidConfig("no models to compare".into()));
    }
    let points = models
        .iter()
        .map(|(&c, f)| {
            let cfg = ProtocolConfig { context: c, ..cfg.clone() };
            let results = run_episodes(f.as_ref(), env, &cfg, jobs)?;
            Ok(AblationPoint {
                axis_value: c,
                summary: aggregate(&results)?,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(AblationResult {
        axis: AblationAxis::ContextLength,
        points,
    })
}

/// Per-metric mean of `refine - base` over episodes where both arms are
/// non-degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub metric: String,
    pub pairs: usize,
    pub discrepancy: Option<f64>,
    pub ws: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerComparison {
    pub ablation: AblationResult,
    pub deltas: Vec<PairedDelta>,
    pub base: Vec<EpisodeResult>,
    pub refine: Vec<EpisodeResult>,
}

/// Paired base-vs-refine evaluation: both arms see the same episode
/// streams, hence the same start poses and ground-truth context.
pub fn compare_samplers(
    base: &dyn ModelFactory,
    refine: &dyn ModelFactory,
    env: &EvalEnv,
    cfg: &ProtocolConfig,
    jobs: usize,
) -> Result<SamplerComparison, HarnessError> {
    let rb = run_episodes(base, env, cfg, jobs)?;
    let rr = run_episodes(refine, env, cfg, jobs)?;
    let points = vec![
        AblationPoint {
            axis_value: 0,
            summary: aggregate(&rb)?,
        },
        AblationPoint {
            axis_value: 1,
            summary: aggregate(&rr)?,
        },
    ];
    let mut deltas = Vec::new();
    for (i, m) in rb[0].metrics.iter().enumerate() {
        let mut dd = Vec::new();
        let mut dw = Vec::new();
        for (b, r) in rb.iter().zip(&rr) {
            debug_assert_eq!(b.start, r.start);
            let (mb, mr) = (&b.metrics[i], &r.metrics[i]);
            if let (Some(wb), Some(wr)) = (mb.ws, mr.ws) {
                dd.push(mr.discrepancy - mb.discrepancy);
                dw.push(wr - wb);
            }
        }
        deltas.push(PairedDelta {
            metric: m.metric.clone(),
            pairs: dd.len(),
            discrepancy: Stat::of(&dd).map(|s| s.mean),
            ws: Stat::of(&dw).map(|s| s.mean),
        });
    }
    Ok(SamplerComparison {
        ablation: AblationResult {
            axis: AblationAxis::RefineOnOff,
            points,
        },
        deltas,
        base: rb,
        refine: rr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::fixture;
    use crate::model::{DriftModel, DriftParams, FrozenModel, OracleModel, WorldModel};

    fn env() -> EvalEnv {
        EvalEnv::new(fixture("room3").unwrap(), RenderConfig::default())
    }

    fn oracle() -> Box<dyn WorldModel> {
        Box::new(OracleModel::new())
    }

    fn frozen() -> Box<dyn WorldModel> {
        Box::new(FrozenModel)
    }

    fn drift1() -> Box<dyn WorldModel> {
        Box::new(DriftModel::new(DriftParams::yaw(1)).unwrap())
    }

    #[test]
    fn oracle_is_perfectly_stable() {
        let cfg = ProtocolConfig::new(Action::TurnLeft, 3, 4);
        for r in run_episodes(&oracle, &env(), &cfg, 1).unwrap() {
            assert_eq!(r.metrics[0].ws, Some(0.0));
            assert!(r.psnr.is_infinite());
        }
    }

    #[test]
    fn frozen_model_is_degenerate() {
        let cfg = ProtocolConfig::new(Action::TurnRight, 2, 3);
        let res = run_episodes(&frozen, &env(), &cfg, 1).unwrap();
        let s = aggregate(&res).unwrap();
        assert!(s[0].all_degenerate());
        assert_eq!(s[0].ws, None);
    }

    #[test]
    fn episodes_are_schedule_independent() {
        let cfg = ProtocolConfig::new(Action::TurnLeft, 2, 6);
        let serial = run_episodes(&drift1, &env(), &cfg, 1).unwrap();
        let parallel = run_episodes(&drift1, &env(), &cfg, 3).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(run_protocol(&drift1, &env(), &cfg, 4).unwrap(), serial[4]);
    }

    #[test]
    fn kept_frames_cover_the_probe() {
        let mut cfg = ProtocolConfig::new(Action::TurnLeft, 3, 1);
        cfg.keep_frames = true;
        let r = run_protocol(&oracle, &env(), &cfg, 0).unwrap();
        let f = r.frames.unwrap();
        assert_eq!(f.len(), 7);
        assert_eq!(f[0], f[6]);
        assert_ne!(f[0], f[3]);
    }

    #[test]
    fn aggregate_statistics() {
        let cfg = ProtocolConfig::new(Action::TurnLeft, 2, 5);
        let mut res = run_episodes(&drift1, &env(), &cfg, 1).unwrap();
        let one = aggregate(&res[..1]).unwrap();
        assert_eq!(one[0].ws.unwrap().mean, res[0].metrics[0].ws.unwrap());
        assert_eq!(one[0].ws.unwrap().std, 0.0);
        let a = aggregate(&res).unwrap();
        res.reverse();
        assert_eq!(aggregate(&res).unwrap(), a);
        assert_eq!(aggregate(&[]), Err(HarnessError::EmptyResults));
    }

    #[test]
    fn seq_len_points_are_sorted() {
        let cfg = ProtocolConfig::new(Action::TurnRight, 1, 2);
        let r = ablate_seq_len(&oracle, &env(), &cfg, &[4, 1, 8], 1).unwrap();
        let xs: Vec<usize> = r.points.iter().map(|p| p.axis_value).collect();
        assert_eq!(xs, vec![1, 4, 8]);
        for p in &r.points {
            assert_eq!(p.summary[0].discrepancy.unwrap().mean, 0.0);
        }
    }

    #[test]
    fn identical_models_give_identical_context_points() {
        let cfg = ProtocolConfig::new(Action::TurnRight, 2, 3);
        let mut models: BTreeMap<usize, Box<dyn ModelFactory + Send>> = BTreeMap::new();
        models.insert(8, Box::new(drift1 as fn() -> Box<dyn WorldModel>));
        models.insert(2, Box::new(drift1 as fn() -> Box<dyn WorldModel>));
        let r = ablate_context(&models, &env(), &cfg, 1).unwrap();
        assert_eq!(r.points[0].axis_value, 2);
        assert_eq!(r.points[0].summary, r.points[1].summary);
    }

    #[test]
    fn identical_arms_have_zero_delta() {
        let cfg = ProtocolConfig::new(Action::TurnLeft, 2, 3);
        let c = compare_samplers(&drift1, &drift1, &env(), &cfg, 1).unwrap();
        assert_eq!(c.deltas[0].discrepancy, Some(0.0));
        assert_eq!(c.deltas[0].pairs, 3);
    }
}
