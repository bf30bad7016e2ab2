//! Run configuration: one JSON document with optional sections, dotted
//! `--set` overrides and paths resolved against the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::CliError;
use crate::action::Action;
use crate::diffusion::{DenoiserConfig, SamplerConfig, TrainConfig};
use crate::env::{fixture, generate_arena, generate_maze, ArenaSpec, MazeMap, MazeSpec, RenderConfig};
use crate::metrics::{DistanceMetric, EmbeddingProvider, ExternalEmbeddings};
use crate::model::DriftParams;

pub const SEED_ENV: &str = "WSBENCH_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    Fixture(String),
    Maze(MazeSpec),
    Arena(ArenaSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub map: MapSource,
    pub render: RenderConfig,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            map: MapSource::Fixture("room3".into()),
            render: RenderConfig::default(),
        }
    }
}

// Unit variants would silently accept stray keys under an internal tag, so
// every variant is a struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSection {
    Oracle {},
    Frozen {},
    Noisy {
        sigma: f64,
    },
    Drift {
        #[serde(default)]
        yaw_bias_steps: i32,
        #[serde(default)]
        color_drift_rate: f64,
        #[serde(default)]
        decor_delete_after: Option<u32>,
    },
    Diffusion {
        #[serde(default)]
        checkpoint: Option<PathBuf>,
        /// Context length -> checkpoint, for context ablations.
        #[serde(default, deserialize_with = "context_keys")]
        checkpoints: BTreeMap<usize, PathBuf>,
    },
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection::Oracle {}
    }
}

// Buffered tagged content hands map keys over as strings.
fn context_keys<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, PathBuf>, D::Error> {
    BTreeMap::<String, PathBuf>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.parse()
                .map(|k| (k, v))
                .map_err(|_| serde::de::Error::custom(format!("context length key {k:?} is not an integer")))
        })
        .collect()
}

impl ModelSection {
    pub fn drift_params(&self) -> Option<DriftParams> {
        match self {
            ModelSection::Drift {
                yaw_bias_steps,
                color_drift_rate,
                decor_delete_after,
            } => Some(DriftParams {
                yaw_bias_steps: *yaw_bias_steps,
                color_drift_rate: *color_drift_rate,
                decor_delete_after: *decor_delete_after,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpec {
    Mse,
    Ssim,
    PatchCos,
    ExternalCos(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSpec {
    SequenceLength,
    ContextLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub n: usize,
    pub action: Action,
    pub episodes: usize,
    pub context: usize,
    pub metrics: Vec<MetricSpec>,
    pub master_seed: u64,
    /// Axis swept by `ablate`.
    pub axis: AxisSpec,
    pub sequence_lengths: Vec<usize>,
    /// Context keys for reference models in a context ablation (diffusion
    /// models take theirs from `model.checkpoints`).
    pub context_lengths: Vec<usize>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            n: 4,
            action: Action::TurnLeft,
            episodes: 20,
            context: 4,
            metrics: vec![MetricSpec::Mse],
            master_seed: 0,
            axis: AxisSpec::SequenceLength,
            sequence_lengths: vec![1, 2, 4, 8],
            context_lengths: vec![2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub episodes: usize,
    pub length: usize,
    pub seed: u64,
    pub frame_side: usize,
    pub context: usize,
    pub augment: bool,
    /// Dataset file name inside the output directory (gen-data), or the
    /// dataset to read (train, finetune-irp).
    pub path: PathBuf,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            episodes: 48,
            length: 16,
            seed: 1,
            frame_side: 16,
            context: 4,
            augment: false,
            path: PathBuf::from("dataset.wsf1"),
        }
    }
}

/// Denoiser shape and optimizer settings. `frame_side` and `context` are
/// taken from the dataset being trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub denoiser: DenoiserConfig,
    pub optim: TrainConfig,
    /// Dataset to train on; defaults to `data.path` inside the output directory.
    pub dataset: Option<PathBuf>,
    /// Pretrained checkpoint that `finetune-irp` starts from.
    pub base_checkpoint: Option<PathBuf>,
    pub irp_epochs: usize,
    pub checkpoint_name: String,
    pub irp_checkpoint_name: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            denoiser: DenoiserConfig::default(),
            optim: TrainConfig::default(),
            dataset: None,
            base_checkpoint: None,
            irp_epochs: 10,
            checkpoint_name: "checkpoint.json".into(),
            irp_checkpoint_name: "checkpoint_irp.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvSection,
    pub model: ModelSection,
    pub protocol: ProtocolSection,
    pub sampler: SamplerConfig,
    pub data: DataSection,
    pub train: TrainSection,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvSection::default(),
            model: ModelSection::default(),
            protocol: ProtocolSection::default(),
            sampler: SamplerConfig::default(),
            data: DataSection::default(),
            train: TrainSection::default(),
            output: PathBuf::from("out"),
        }
    }
}

/// A parsed configuration plus the canonical JSON it was built from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// SHA-256 of the effective configuration (after overrides), output
    /// directory excluded.
    pub hash: String,
    base_dir: PathBuf,
}

/// Parses `--set` values as JSON, falling back to a plain string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key '{key}'")));
    }
    let mut cur = root;
    for p in &parts[..parts.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override '{key}' descends into a non-object")))?;
        cur = obj
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("override '{key}' descends into a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

impl LoadedConfig {
    /// Reads `path` (or starts from defaults when `None`), applies overrides
    /// and the seed environment variable, then validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let (mut value, base_dir) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("malformed config {}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (v, dir)
            }
            None => (Value::Object(Default::default()), PathBuf::from(".")),
        };
        if !value.is_object() {
            return Err(CliError::Config("config must be a JSON object".into()));
        }
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        if let Ok(seed) = std::env::var(SEED_ENV) {
            let seed: u64 = seed
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer")))?;
            apply_override(&mut value, &format!("protocol.master_seed={seed}"))?;
        }
        let config: RunConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        // Hash the fully-defaulted config so equivalent spellings agree. The
        // output directory is where results go, not part of the experiment.
        let mut canonical = serde_json::to_value(&config).expect("config serializes");
        canonical.as_object_mut().expect("object").remove("output");
        let hash = hex::encode(Sha256::digest(canonical.to_string().as_bytes()));
        Ok(Self {
            config,
            hash,
            base_dir: if base_dir.as_os_str().is_empty() {
                PathBuf::from(".")
            } else {
                base_dir
            },
        })
    }

    /// Resolves a config-relative path.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output)
    }

    /// Resolves an input file that must already exist.
    pub fn input(&self, p: &Path, what: &str) -> Result<PathBuf, CliError> {
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(CliError::Config(format!("{what} {} does not exist", full.display())));
        }
        Ok(full)
    }

    pub fn build_map(&self) -> Result<MazeMap, CliError> {
        let r = match &self.config.env.map {
            MapSource::Fixture(name) => fixture(name),
            MapSource::Maze(spec) => generate_maze(spec),
            MapSource::Arena(spec) => generate_arena(spec),
            MapSource::File(p) => MazeMap::load(&self.input(p, "map file")?),
        };
        r.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn metrics(&self) -> Result<Vec<DistanceMetric>, CliError> {
        self.config
            .protocol
            .metrics
            .iter()
            .map(|m| {
                Ok(match m {
                    MetricSpec::Mse => DistanceMetric::Mse,
                    MetricSpec::Ssim => DistanceMetric::Ssim,
                    MetricSpec::PatchCos => DistanceMetric::EmbedCos(EmbeddingProvider::PatchStats),
                    MetricSpec::ExternalCos(p) => {
                        let e = ExternalEmbeddings::load(&self.input(p, "embedding file")?)
                            .map_err(|e| CliError::Config(e.to_string()))?;
                        DistanceMetric::EmbedCos(EmbeddingProvider::External(e))
                    }
                })
            })
            .collect()
    }
}
