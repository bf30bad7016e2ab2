//! The `wsbench` command line: dataset generation, training, evaluation,
//! ablations, heatmaps and rendering, driven by one JSON config.
//!
//! Exit codes: 0 success, 2 config, 3 I/O, 4 training failure, 5 every
//! episode degenerate, 6 capability mismatch.

mod config;

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::action::{Action, ActionSequence};
use crate::diffusion::{
    build_dataset, embedding_heatmap, finetune_irp, generate_episodes, train, Checkpoint,
    CheckpointMetadata, Denoiser, DenoiserConfig, DiffusionError, DiffusionWorldModel,
    SamplerConfig, SamplerKind, TrainConfig, TransitionDataset,
};
use crate::env::{rollout, EnvError, Pose};
use crate::harness::{
    ablate_context, ablate_seq_len, ablation_csv, aggregate, compare_samplers, episodes_csv,
    run_episodes, AblationResult, EvalEnv, HarnessError, ProtocolConfig,
};
use crate::model::{DriftModel, FrozenModel, ModelFactory, NoisyModel, OracleModel, WorldModel};
use crate::rng::seeded;
use crate::svg::{self, Series};

pub use config::{
    AxisSpec, DataSection, EnvSection, LoadedConfig, MapSource, MetricSpec, ModelSection,
    ProtocolSection, RunConfig, TrainSection, SEED_ENV,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("capability mismatch: {0}")]
    Capability(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Training(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::Capability(_) => 6,
        }
    }
}

impl From<DiffusionError> for CliError {
    fn from(e: DiffusionError) -> Self {
        match e {
            DiffusionError::Io(_) => CliError::Io(e.to_string()),
            DiffusionError::NonFiniteLoss { .. } => CliError::Training(e.to_string()),
            DiffusionError::MissingInverseEmbeddings => CliError::Capability(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Env(EnvError::Io(_)) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Io(_) => CliError::Io(e.to_string()),
            EnvError::InvalidPose { .. } => CliError::Config(format!("InvalidPose: {e}")),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wsbench", version, about = "World-stability benchmark for action-conditioned world models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. `--set protocol.n=8`; values parse as JSON or
    /// fall back to strings. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Maximum episode workers. Output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a WSF1 dataset of oracle random-walk transitions.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Add rewound (inverse-action) transitions.
        #[arg(long)]
        augment: bool,
    },
    /// Train a denoiser from scratch.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Fine-tune a checkpoint with inverse-action embeddings on an augmented dataset.
    FinetuneIrp {
        #[command(flatten)]
        common: Common,
    },
    /// Run the stability protocol once.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep sequence length or context length.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Paired base vs refinement sampler comparison.
    CompareSamplers {
        #[command(flatten)]
        common: Common,
    },
    /// Cosine similarity between inverse and forward action embeddings.
    Heatmap {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to read instead of `model.checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Render a pose, or a rollout from it, to PPM files.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        x: i32,
        #[arg(long, allow_negative_numbers = true)]
        y: i32,
        #[arg(long)]
        heading: u8,
        /// Action codes to roll out, e.g. `LLFR`.
        #[arg(long)]
        actions: Option<String>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::GenData { common, .. }
            | Command::Train { common }
            | Command::FinetuneIrp { common }
            | Command::Eval { common }
            | Command::Ablate { common }
            | Command::CompareSamplers { common }
            | Command::Heatmap { common, .. }
            | Command::Render { common, .. } => common,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common().clone();
    if common.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let cfg = LoadedConfig::load(common.config.as_deref(), &common.set)?;
    let ctx = Ctx { cfg, jobs: common.jobs };
    match cli.command {
        Command::GenData { augment, .. } => ctx.gen_data(augment),
        Command::Train { .. } => ctx.train(),
        Command::FinetuneIrp { .. } => ctx.finetune(),
        Command::Eval { .. } => ctx.eval(),
        Command::Ablate { .. } => ctx.ablate(),
        Command::CompareSamplers { .. } => ctx.compare(),
        Command::Heatmap { checkpoint, .. } => ctx.heatmap(checkpoint),
        Command::Render { x, y, heading, actions, .. } => ctx.render(Pose::new(x, y, heading), actions),
    }
}

/// A resolved model: per-episode factory plus provenance.
struct ResolvedModel {
    factory: Box<dyn ModelFactory + Send>,
    name: String,
    checkpoint_hash: Option<String>,
}

struct Ctx {
    cfg: LoadedConfig,
    jobs: usize,
}

impl Ctx {
    fn c(&self) -> &RunConfig {
        &self.cfg.config
    }

    /// A file inside the output directory; `name` may not escape it.
    fn out_file(&self, name: &Path) -> Result<PathBuf, CliError> {
        if name.as_os_str().is_empty() || !name.components().all(|c| matches!(c, Component::Normal(_))) {
            return Err(CliError::Config(format!(
                "output name {} must be relative and stay inside the output directory",
                name.display()
            )));
        }
        let dir = self.cfg.output_dir();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir.join(name))
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.out_file(Path::new(name))?;
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn eval_env(&self) -> Result<EvalEnv, CliError> {
        Ok(EvalEnv::new(self.cfg.build_map()?, self.c().env.render.clone()))
    }

    fn protocol(&self) -> Result<ProtocolConfig, CliError> {
        let p = &self.c().protocol;
        let cfg = ProtocolConfig {
            n: p.n,
            action: p.action,
            episodes: p.episodes,
            context: p.context,
            metrics: self.cfg.metrics()?,
            master_seed: p.master_seed,
            keep_frames: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_checkpoint(&self, p: &Path) -> Result<Checkpoint, CliError> {
        Ok(Checkpoint::load(&self.cfg.input(p, "checkpoint")?)?)
    }

    fn diffusion_factory(&self, ckpt: &Checkpoint, sampler: SamplerConfig) -> Result<ResolvedModel, CliError> {
        let model = Arc::new(ckpt.model.clone());
        let proto = DiffusionWorldModel::new(model, sampler)?;
        let name = proto.name();
        Ok(ResolvedModel {
            factory: Box::new(move || Box::new(proto.clone()) as Box<dyn WorldModel>),
            name,
            checkpoint_hash: Some(ckpt.content_hash()),
        })
    }

    /// The configured model with the configured sampler.
    fn model(&self) -> Result<ResolvedModel, CliError> {
        let factory: Box<dyn ModelFactory + Send> = match &self.c().model {
            ModelSection::Oracle {} => Box::new(|| Box::new(OracleModel::new()) as Box<dyn WorldModel>),
            ModelSection::Frozen {} => Box::new(|| Box::new(FrozenModel) as Box<dyn WorldModel>),
            ModelSection::Noisy { sigma } => {
                let proto = NoisyModel::new(*sigma).map_err(|e| CliError::Config(e.to_string()))?;
                Box::new(move || Box::new(proto.clone()) as Box<dyn WorldModel>)
            }
            m @ ModelSection::Drift { .. } => {
                let params = m.drift_params().expect("drift section");
                let proto = DriftModel::new(params).map_err(|e| CliError::Config(e.to_string()))?;
                Box::new(move || Box::new(proto.clone()) as Box<dyn WorldModel>)
            }
            ModelSection::Diffusion { checkpoint, .. } => {
                let p = checkpoint
                    .as_ref()
                    .ok_or_else(|| CliError::Config("model.checkpoint is required for a diffusion model".into()))?;
                let ckpt = self.load_checkpoint(p)?;
                return self.diffusion_factory(&ckpt, self.c().sampler);
            }
        };
        let name = factory.build().name();
        Ok(ResolvedModel {
            factory,
            name,
            checkpoint_hash: None,
        })
    }

    fn dataset(&self) -> Result<TransitionDataset, CliError> {
        let path = match &self.c().train.dataset {
            Some(p) => self.cfg.input(p, "dataset")?,
            None => {
                let p = self.cfg.output_dir().join(&self.c().data.path);
                if !p.is_file() {
                    return Err(CliError::Config(format!("dataset {} does not exist", p.display())));
                }
                p
            }
        };
        Ok(TransitionDataset::load(&path)?)
    }

    fn gen_data(&self, augment: bool) -> Result<(), CliError> {
        let d: &DataSection = &self.c().data;
        let map = self.cfg.build_map()?;
        let episodes = generate_episodes(&map, &self.c().env.render, d.frame_side, d.episodes, d.length, d.seed)?;
        let ds = build_dataset(
            &episodes,
            d.context,
            d.frame_side,
            augment || d.augment,
            d.seed,
            &map.content_hash(),
        )?;
        let path = self.out_file(&d.path)?;
        ds.save(&path)?;
        println!("{} transitions ({} rewound) -> {}", ds.len(), ds.rewound_count(), path.display());
        Ok(())
    }

    fn save_training(
        &self,
        name: &str,
        ckpt: &Checkpoint,
        losses: &[f64],
    ) -> Result<(), CliError> {
        let path = self.out_file(Path::new(name))?;
        ckpt.save(&path)?;
        let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
        let mut csv = String::from("epoch,loss\n");
        for (i, l) in losses.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i + 1, l));
        }
        self.write(&format!("{stem}_loss.csv"), csv)?;
        match losses.last() {
            Some(l) => println!("final loss {l} -> {}", path.display()),
            None => println!("no epochs run -> {}", path.display()),
        }
        Ok(())
    }

    fn train(&self) -> Result<(), CliError> {
        let t: &TrainSection = &self.c().train;
        let ds = self.dataset()?;
        let dcfg = DenoiserConfig {
            frame_side: ds.frame_side,
            context: ds.context,
            ..t.denoiser
        };
        let mut model = Denoiser::new(dcfg, &mut seeded(t.optim.seed))?;
        let report = train(&mut model, &ds, &t.optim)?;
        let meta = CheckpointMetadata {
            epochs: t.optim.epochs,
            seed: t.optim.seed,
            dataset_hash: ds.content_hash(),
            irp_epochs: 0,
        };
        self.save_training(&t.checkpoint_name, &Checkpoint::new(model, meta), &report.loss_curve)
    }

    fn finetune(&self) -> Result<(), CliError> {
        let t: &TrainSection = &self.c().train;
        let base = t
            .base_checkpoint
            .as_ref()
            .ok_or_else(|| CliError::Config("train.base_checkpoint is required for finetune-irp".into()))?;
        let mut ckpt = self.load_checkpoint(base)?;
        let ds = self.dataset()?;
        if ds.rewound_count() == 0 {
            eprintln!("warning: dataset has no rewound transitions; fine-tuning behaves as plain training");
        }
        let cfg = TrainConfig {
            epochs: t.irp_epochs,
            ..t.optim
        };
        let report = finetune_irp(&mut ckpt.model, &ds, &cfg)?;
        ckpt.metadata.epochs += t.irp_epochs;
        ckpt.metadata.irp_epochs += t.irp_epochs;
        ckpt.metadata.dataset_hash = ds.content_hash();
        self.save_training(&t.irp_checkpoint_name, &ckpt, &report.loss_curve)
    }

    fn header(&self, command: &str) -> serde_json::Map<String, serde_json::Value> {
        let p = &self.c().protocol;
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(command));
        m.insert("config_hash".into(), json!(self.cfg.hash));
        m.insert(
            "protocol".into(),
            json!({
                "n": p.n,
                "action": p.action,
                "episodes": p.episodes,
                "context": p.context,
                "master_seed": p.master_seed,
            }),
        );
        m
    }

    fn write_report(&self, stem: &str, report: serde_json::Map<String, serde_json::Value>) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(report)).expect("report serializes");
        text.push('\n');
        let path = self.write(&format!("{stem}.json"), text)?;
        println!("report -> {}", path.display());
        Ok(())
    }

    fn eval(&self) -> Result<(), CliError> {
        let env = self.eval_env()?;
        let proto = self.protocol()?;
        let model = self.model()?;
        let results = run_episodes(model.factory.as_ref(), &env, &proto, self.jobs)?;
        let summary = aggregate(&results)?;

        let mut report = self.header("eval");
        report.insert("model".into(), json!(model.name));
        report.insert("checkpoint_hash".into(), json!(model.checkpoint_hash));
        report.insert("summary".into(), json!(summary));
        report.insert("episodes".into(), json!(results));
        self.write_report("eval_report", report)?;
        self.write("eval_episodes.csv", episodes_csv(&results))?;

        let first = &summary[0].metric;
        let pick = |f: fn(&crate::harness::MetricOutcome) -> f64| {
            results
                .iter()
                .map(|r| (r.episode as f64, f(&r.metrics[0])))
                .collect::<Vec<_>>()
        };
        let plot = svg::line_plot(
            &format!("{} per episode ({first})", model.name),
            "episode",
            "distance",
            &[
                Series::new("discrepancy", pick(|m| m.discrepancy)),
                Series::new("dynamics", pick(|m| m.dynamics)),
            ],
        );
        self.write("eval_episodes.svg", plot)?;

        for s in &summary {
            match s.ws {
                Some(ws) => println!(
                    "{}: ws {:.6} +- {:.6} over {} episodes ({} degenerate)",
                    s.metric,
                    ws.mean,
                    ws.std,
                    s.episodes - s.degenerate,
                    s.degenerate
                ),
                None => println!("{}: all {} episodes degenerate", s.metric, s.episodes),
            }
        }
        if summary.iter().all(|s| s.all_degenerate()) {
            return Err(degenerate(results.len()));
        }
        Ok(())
    }

    fn ablate(&self) -> Result<(), CliError> {
        let env = self.eval_env()?;
        let proto = self.protocol()?;
        let p = &self.c().protocol;
        let (result, hashes, name) = match p.axis {
            AxisSpec::SequenceLength => {
                let model = self.model()?;
                let r = ablate_seq_len(model.factory.as_ref(), &env, &proto, &p.sequence_lengths, self.jobs)?;
                (r, json!(model.checkpoint_hash), model.name)
            }
            AxisSpec::ContextLength => {
                let mut models: BTreeMap<usize, Box<dyn ModelFactory + Send>> = BTreeMap::new();
                let mut hashes = BTreeMap::new();
                let name;
                match &self.c().model {
                    ModelSection::Diffusion { checkpoints, .. } => {
                        if checkpoints.is_empty() {
                            return Err(CliError::Config(
                                "a context ablation over diffusion models needs model.checkpoints".into(),
                            ));
                        }
                        for (&c, path) in checkpoints {
                            let ckpt = self.load_checkpoint(path)?;
                            if ckpt.model.config().context != c {
                                return Err(CliError::Config(format!(
                                    "checkpoint {} has context {}, listed under {c}",
                                    path.display(),
                                    ckpt.model.config().context
                                )));
                            }
                            let m = self.diffusion_factory(&ckpt, self.c().sampler)?;
                            hashes.insert(c, m.checkpoint_hash.clone());
                            models.insert(c, m.factory);
                        }
                        name = "diffusion".to_string();
                    }
                    _ => {
                        if p.context_lengths.is_empty() || p.context_lengths.contains(&0) {
                            return Err(CliError::Config("protocol.context_lengths must be positive".into()));
                        }
                        let m = self.model()?;
                        name = m.name;
                        for &c in &p.context_lengths {
                            models.insert(c, self.model()?.factory);
                        }
                    }
                }
                let r = ablate_context(&models, &env, &proto, self.jobs)?;
                (r, json!(hashes), name)
            }
        };

        let mut report = self.header("ablate");
        report.insert("model".into(), json!(name));
        report.insert("checkpoint_hash".into(), hashes);
        report.insert("ablation".into(), json!(result));
        self.write_report("ablation_report", report)?;
        self.write("ablation.csv", ablation_csv(&result))?;
        let x_label = match p.axis {
            AxisSpec::SequenceLength => "sequence length N",
            AxisSpec::ContextLength => "context length",
        };
        self.write("ablation.svg", ablation_plot(&format!("{name} ablation"), x_label, &result))?;
        for line in ablation_csv(&result).lines().skip(1) {
            println!("{line}");
        }
        if result.points.iter().all(|pt| pt.summary.iter().all(|s| s.all_degenerate())) {
            return Err(degenerate(proto.episodes));
        }
        Ok(())
    }

    fn compare(&self) -> Result<(), CliError> {
        let path = match &self.c().model {
            ModelSection::Diffusion { checkpoint: Some(p), .. } => p.clone(),
            ModelSection::Diffusion { .. } => {
                return Err(CliError::Config("model.checkpoint is required for compare-samplers".into()))
            }
            other => {
                return Err(CliError::Capability(format!(
                    "compare-samplers needs a diffusion model, got {}",
                    serde_json::to_value(other).ok().and_then(|v| v["kind"].as_str().map(String::from)).unwrap_or_default()
                )))
            }
        };
        let env = self.eval_env()?;
        let proto = self.protocol()?;
        let ckpt = self.load_checkpoint(&path)?;
        let s = self.c().sampler;
        let base = self.diffusion_factory(&ckpt, SamplerConfig { kind: SamplerKind::Base, ..s })?;
        let refine = self.diffusion_factory(&ckpt, SamplerConfig { kind: SamplerKind::Refine, ..s })?;
        let cmp = compare_samplers(base.factory.as_ref(), refine.factory.as_ref(), &env, &proto, self.jobs)?;

        let mut report = self.header("compare-samplers");
        report.insert("model".into(), json!(base.name));
        report.insert("checkpoint_hash".into(), json!(base.checkpoint_hash));
        report.insert("sampler".into(), json!(s));
        report.insert("deltas".into(), json!(cmp.deltas));
        report.insert("ablation".into(), json!(cmp.ablation));
        report.insert("base".into(), json!(cmp.base));
        report.insert("refine".into(), json!(cmp.refine));
        self.write_report("compare_report", report)?;
        self.write("compare.csv", ablation_csv(&cmp.ablation))?;
        self.write(
            "compare.svg",
            ablation_plot("base (0) vs refinement (1)", "sampler", &cmp.ablation),
        )?;
        for d in &cmp.deltas {
            let f = |v: Option<f64>| v.map(|x| format!("{x:+.6}")).unwrap_or_else(|| "n/a".into());
            println!(
                "{}: refine - base discrepancy {} ws {} over {} paired episodes",
                d.metric,
                f(d.discrepancy),
                f(d.ws),
                d.pairs
            );
        }
        let all_deg = |a: &[crate::harness::EpisodeResult]| a.iter().all(|r| r.metrics.iter().all(|m| m.degenerate()));
        if all_deg(&cmp.base) && all_deg(&cmp.refine) {
            return Err(degenerate(proto.episodes));
        }
        Ok(())
    }

    fn heatmap(&self, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
        let ckpt = match checkpoint {
            Some(p) => {
                if !p.is_file() {
                    return Err(CliError::Config(format!("checkpoint {} does not exist", p.display())));
                }
                Checkpoint::load(&p)?
            }
            None => match &self.c().model {
                ModelSection::Diffusion { checkpoint: Some(p), .. } => self.load_checkpoint(p)?,
                _ => {
                    return Err(CliError::Config(
                        "heatmap needs --checkpoint or a diffusion model.checkpoint".into(),
                    ))
                }
            },
        };
        let h = embedding_heatmap(&ckpt.model)
            .map_err(|e| CliError::Capability(format!("{e}; run finetune-irp first")))?;
        self.write("heatmap.csv", h.to_csv())?;
        let label = |a: &Action| format!("{a:?}");
        let rows: Vec<String> = h.rows.iter().map(|a| format!("E_inv[{}]", label(a))).collect();
        let cols: Vec<String> = h.cols.iter().map(|a| format!("E[{}]", label(a))).collect();
        self.write(
            "heatmap.svg",
            svg::heatmap("cos(inverse embedding, forward embedding)", &rows, &cols, &h.values),
        )?;
        print!("{}", h.to_csv());
        println!(
            "diagonal mean {:.4}, off-diagonal mean {:.4}, inverse hits {}/{}",
            h.diagonal_mean(),
            h.off_diagonal_mean(),
            h.inverse_hits(),
            h.rows.len()
        );
        Ok(())
    }

    fn render(&self, start: Pose, actions: Option<String>) -> Result<(), CliError> {
        let map = self.cfg.build_map()?;
        let seq = match actions {
            Some(s) => s
                .parse::<ActionSequence>()
                .map_err(|e| CliError::Config(e.to_string()))?,
            None => ActionSequence::empty(),
        };
        let r = rollout(&map, start, &seq, &self.c().env.render)?;
        for (i, (f, p)) in r.frames.iter().zip(&r.poses).enumerate() {
            let path = self.write(&format!("frame_{i:03}.ppm"), f.to_ppm())?;
            println!("({}, {}, {}) -> {}", p.x, p.y, p.heading, path.display());
        }
        if r.any_collision {
            eprintln!("warning: rollout collided with a wall");
        }
        Ok(())
    }
}

fn degenerate(episodes: usize) -> CliError {
    CliError::Degenerate(format!(
        "DegenerateDynamics: all {episodes} episodes have zero dynamics for every metric; the model ignores actions"
    ))
}

/// Discrepancy and dynamics against the ablation axis, one pair of curves
/// per metric.
fn ablation_plot(title: &str, x_label: &str, r: &AblationResult) -> String {
    let mut series = Vec::new();
    let metrics: Vec<String> = r
        .points
        .first()
        .map(|p| p.summary.iter().map(|s| s.metric.clone()).collect())
        .unwrap_or_default();
    for (i, m) in metrics.iter().enumerate() {
        let curve = |f: fn(&crate::harness::MetricSummary) -> Option<f64>| {
            r.points
                .iter()
                .map(|p| (p.axis_value as f64, f(&p.summary[i]).unwrap_or(f64::NAN)))
                .collect::<Vec<_>>()
        };
        series.push(Series::new(format!("discrepancy {m}"), curve(|s| s.discrepancy.map(|x| x.mean))));
        series.push(Series::new(format!("dynamics {m}"), curve(|s| s.dynamics.map(|x| x.mean))));
    }
    svg::line_plot(title, x_label, "mean distance", &series)
}
