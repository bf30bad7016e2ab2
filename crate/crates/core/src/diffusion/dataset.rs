//! Transition datasets, rewind augmentation and the `WSF1` container.
//!
//! `WSF1` layout: the 4 magic bytes `WSF1`, a little-endian `u32` header
//! length, a JSON header, then `count * (context + 1) * D` little-endian
//! `f32` values (each item's context frames followed by its target).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DiffusionError;
use crate::action::Action;
use crate::action::HEADINGS;
use crate::env::{render, step, MazeMap, Pose, RenderConfig};
use crate::rng::episode_rng;

pub const MAGIC: &[u8; 4] = b"WSF1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Rewound,
}

/// One `(context, action) -> target` example. Frames are grayscale
/// `side x side` images in `[0, 1]`, stored at `f32` precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// `context` frames of `D` values each, oldest first; the last one is the
    /// frame the action is applied to.
    pub context: Vec<f32>,
    /// Action that produced each context frame (`Noop` for padding).
    pub context_actions: Vec<Action>,
    /// Action that turns the last context frame into `target`.
    pub action: Action,
    pub target: Vec<f32>,
    pub provenance: Provenance,
    /// Ground-truth poses `(from, to)` when generated from the simulator.
    pub poses: Option<(Pose, Pose)>,
}

impl Transition {
    /// For rewound items, the original action whose effect this undoes.
    pub fn original_action(&self) -> Action {
        match self.provenance {
            Provenance::Original => self.action,
            Provenance::Rewound => self.action.inverse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    pub frame_side: usize,
    pub context: usize,
    pub seed: u64,
    pub map_hash: String,
    pub items: Vec<Transition>,
}

/// A simulator rollout at model resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// `actions.len() + 1` grayscale frames.
    pub frames: Vec<Vec<f32>>,
    pub actions: Vec<Action>,
    pub poses: Vec<Pose>,
    pub collided: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    frame_side: usize,
    context: usize,
    count: usize,
    seed: u64,
    map_hash: String,
    actions: String,
    context_actions: String,
    provenance: String,
}

impl TransitionDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn frame_dim(&self) -> usize {
        self.frame_side * self.frame_side
    }

    pub fn rewound_count(&self) -> usize {
        self.items
            .iter()
            .filter(|t| t.provenance == Provenance::Rewound)
            .count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let code = |a: &Action| a.code();
        let header = Header {
            version: FORMAT_VERSION,
            frame_side: self.frame_side,
            context: self.context,
            count: self.items.len(),
            seed: self.seed,
            map_hash: self.map_hash.clone(),
            actions: self.items.iter().map(|t| code(&t.action)).collect(),
            context_actions: self
                .items
                .iter()
                .flat_map(|t| t.context_actions.iter().map(code))
                .collect(),
            provenance: self
                .items
                .iter()
                .map(|t| match t.provenance {
                    Provenance::Original => 'o',
                    Provenance::Rewound => 'r',
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let per_item = (self.context + 1) * self.frame_dim();
        let mut out = Vec::with_capacity(8 + json.len() + 4 * per_item * self.items.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &self.items {
            for v in t.context.iter().chain(&t.target) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DiffusionError> {
        let bad = |m: &str| DiffusionError::Dataset(m.to_string());
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(bad("missing WSF1 magic"));
        }
        let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let body = bytes.get(8..8 + hlen).ok_or_else(|| bad("truncated header"))?;
        let h: Header =
            serde_json::from_slice(body).map_err(|e| bad(&format!("bad header: {e}")))?;
        if h.version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported dataset version {}", h.version)));
        }
        let parse_actions = |s: &str| -> Result<Vec<Action>, DiffusionError> {
            s.chars()
                .map(|c| Action::from_code(c).map_err(|e| bad(&e.to_string())))
                .collect()
        };
        let actions = parse_actions(&h.actions)?;
        let ctx_actions = parse_actions(&h.context_actions)?;
        let prov: Vec<Provenance> = h
            .provenance
            .chars()
            .map(|c| match c {
                'o' => Ok(Provenance::Original),
                'r' => Ok(Provenance::Rewound),
                _ => Err(bad("bad provenance code")),
            })
            .collect::<Result<_, _>>()?;
        if actions.len() != h.count
            || prov.len() != h.count
            || ctx_actions.len() != h.count * h.context
        {
            return Err(bad("header arrays disagree with count"));
        }
        let d = h.frame_side * h.frame_side;
        let per_item = (h.context + 1) * d;
        let payload = &bytes[8 + hlen..];
        if payload.len() != 4 * per_item * h.count {
            return Err(bad(&format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                4 * per_item * h.count
            )));
        }
        let floats: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let items = floats
            .chunks_exact(per_item)
            .enumerate()
            .map(|(i, chunk)| Transition {
                context: chunk[..h.context * d].to_vec(),
                context_actions: ctx_actions[i * h.context..(i + 1) * h.context].to_vec(),
                action: actions[i],
                target: chunk[h.context * d..].to_vec(),
                provenance: prov[i],
                poses: None,
            })
            .collect();
        Ok(Self {
            frame_side: h.frame_side,
            context: h.context,
            seed: h.seed,
            map_hash: h.map_hash,
            items,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), DiffusionError> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| DiffusionError::Io(format!("{}: {e}", path.display())))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| DiffusionError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, DiffusionError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| DiffusionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&buf)
    }

    /// SHA-256 of the serialized container.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

/// Renders poses at model resolution, caching by pose.
pub struct FrameCache<'a> {
    map: &'a MazeMap,
    render: &'a RenderConfig,
    side: usize,
    cache: HashMap<Pose, Vec<f32>>,
}

impl<'a> FrameCache<'a> {
    pub fn new(map: &'a MazeMap, render: &'a RenderConfig, side: usize) -> Self {
        Self {
            map,
            render,
            side,
            cache: HashMap::new(),
        }
    }

    pub fn gray(&mut self, pose: Pose) -> Result<Vec<f32>, DiffusionError> {
        if let Some(v) = self.cache.get(&pose) {
            return Ok(v.clone());
        }
        let frame = render(self.map, &pose, self.render);
        let g: Vec<f32> = frame
            .to_gray(self.side)
            .map_err(|e| DiffusionError::InvalidConfig(e.to_string()))?
            .into_iter()
            .map(|v| v as f32)
            .collect();
        self.cache.insert(pose, g.clone());
        Ok(g)
    }
}

/// Random walks over the map. Each step picks uniformly among the actions
/// that do not collide from the current pose, so every episode is
/// collision-free. Episode `i` uses stream `i` of `seed`.
pub fn generate_episodes(
    map: &MazeMap,
    render_cfg: &RenderConfig,
    frame_side: usize,
    count: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Episode>, DiffusionError> {
    let floors = map.floor_cells();
    if floors.is_empty() {
        return Err(DiffusionError::InvalidConfig("map has no floor cells".into()));
    }
    let mut cache = FrameCache::new(map, render_cfg, frame_side);
    let mut episodes = Vec::with_capacity(count);
    for e in 0..count {
        let mut rng = episode_rng(seed, e as u64);
        let (x, y) = floors[rng.random_range(0..floors.len())];
        let mut pose = Pose::new(x, y, rng.random_range(0..HEADINGS));
        let mut actions = Vec::with_capacity(length);
        let mut poses = vec![pose];
        for _ in 0..length {
            let legal: Vec<Action> = Action::MOVING
                .into_iter()
                .filter(|&a| !step(map, pose, a).map(|o| o.collided).unwrap_or(true))
                .collect();
            let a = legal[rng.random_range(0..legal.len())];
            pose = step(map, pose, a)?.pose;
            actions.push(a);
            poses.push(pose);
        }
        let frames = poses
            .iter()
            .map(|p| cache.gray(*p))
            .collect::<Result<Vec<_>, _>>()?;
        episodes.push(Episode {
            frames,
            actions,
            poses,
            collided: vec![false; length],
        });
    }
    Ok(episodes)
}

/// Index-level rewind plan for an `n`-action episode with frames
/// `0..=n`: `(from_frame, action_index, inverted, to_frame)` for the `n`
/// original transitions followed by the `n` rewound ones.
pub fn rewind_schedule(n: usize) -> Vec<(usize, usize, bool, usize)> {
    let mut out: Vec<_> = (0..n).map(|i| (i, i, false, i + 1)).collect();
    out.extend((0..n).rev().map(|i| (i + 1, i, true, i)));
    out
}

/// Builds transitions from episodes, optionally appending the rewound half
/// of each episode (`x_{N+1} --a_N^-1--> x_N`, ..., `x_2 --a_1^-1--> x_1`).
///
/// Contexts follow the extended (forward then rewound) frame sequence and
/// are padded at the start by repeating the first frame with `Noop`.
pub fn build_dataset(
    episodes: &[Episode],
    context: usize,
    frame_side: usize,
    augment: bool,
    seed: u64,
    map_hash: &str,
) -> Result<TransitionDataset, DiffusionError> {
    let mut items = Vec::new();
    for (ei, ep) in episodes.iter().enumerate() {
        let n = ep.actions.len();
        if ep.frames.len() != n + 1 {
            return Err(DiffusionError::Dataset(format!(
                "episode {ei} has {} frames for {n} actions",
                ep.frames.len()
            )));
        }
        if augment {
            if let Some(step) = ep.collided.iter().position(|&c| c) {
                return Err(DiffusionError::NonInvertibleAction { episode: ei, step });
            }
        }
        let plan: Vec<_> = rewind_schedule(n)
            .into_iter()
            .filter(|p| augment || !p.2)
            .collect();
        // Extended sequence: frame index and the action that led into it.
        let mut seq_frames = vec![0usize];
        let mut seq_in = vec![Action::Noop];
        for &(_, ai, inv, to) in &plan {
            seq_frames.push(to);
            let a = ep.actions[ai];
            seq_in.push(if inv { a.inverse() } else { a });
        }
        for (k, &(from, ai, inv, to)) in plan.iter().enumerate() {
            debug_assert_eq!(seq_frames[k], from);
            let mut ctx = Vec::with_capacity(context * frame_side * frame_side);
            let mut ctx_actions = Vec::with_capacity(context);
            for j in 0..context {
                let pos = k as isize - (context - 1 - j) as isize;
                if pos < 0 {
                    ctx.extend_from_slice(&ep.frames[seq_frames[0]]);
                    ctx_actions.push(Action::Noop);
                } else {
                    ctx.extend_from_slice(&ep.frames[seq_frames[pos as usize]]);
                    ctx_actions.push(seq_in[pos as usize]);
                }
            }
            let a = ep.actions[ai];
            let poses = (ep.poses.len() == n + 1).then(|| (ep.poses[from], ep.poses[to]));
            items.push(Transition {
                context: ctx,
                context_actions: ctx_actions,
                action: if inv { a.inverse() } else { a },
                target: ep.frames[to].clone(),
                provenance: if inv {
                    Provenance::Rewound
                } else {
                    Provenance::Original
                },
                poses,
            });
        }
    }
    Ok(TransitionDataset {
        frame_side,
        context,
        seed,
        map_hash: map_hash.to_string(),
        items,
    })
}

/// Original plus rewound transitions for every episode (`2N` per episode).
pub fn augment_dataset(
    episodes: &[Episode],
    context: usize,
    frame_side: usize,
    seed: u64,
    map_hash: &str,
) -> Result<TransitionDataset, DiffusionError> {
    build_dataset(episodes, context, frame_side, true, seed, map_hash)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::fixture;

    #[test]
    fn paper_style_two_step_example() {
        // {(x1,a1),(x2,a2)} -> {(x1,a1),(x2,a2),(x3,a2^-1),(x2,a1^-1)}, 0-based.
        assert_eq!(
            rewind_schedule(2),
            vec![(0, 0, false, 1), (1, 1, false, 2), (2, 1, true, 1), (1, 0, true, 0)]
        );
        assert_eq!(rewind_schedule(1), vec![(0, 0, false, 1), (1, 0, true, 0)]);
        assert_eq!(rewind_schedule(7).len(), 14);
    }

    fn episodes() -> (crate::env::MazeMap, Vec<Episode>) {
        let map = fixture("room3").unwrap();
        let eps = generate_episodes(&map, &RenderConfig::default(), 16, 5, 6, 3).unwrap();
        (map, eps)
    }

    #[test]
    fn walks_are_collision_free_and_consistent() {
        let (map, eps) = episodes();
        for ep in &eps {
            assert!(ep.collided.iter().all(|&c| !c));
            for (i, &a) in ep.actions.iter().enumerate() {
                assert_eq!(step(&map, ep.poses[i], a).unwrap().pose, ep.poses[i + 1]);
            }
        }
    }

    #[test]
    fn augmented_counts_and_contexts() {
        let (map, eps) = episodes();
        let plain = build_dataset(&eps, 3, 16, false, 3, &map.content_hash()).unwrap();
        let aug = augment_dataset(&eps, 3, 16, 3, &map.content_hash()).unwrap();
        assert_eq!(plain.len(), 30);
        assert_eq!(aug.len(), 60);
        assert_eq!(aug.rewound_count(), 30);
        // First transition of an episode: context is the first frame three times.
        let t0 = &aug.items[0];
        assert_eq!(t0.context_actions, vec![Action::Noop; 3]);
        assert_eq!(&t0.context[512..], &eps[0].frames[0][..]);
        // First rewound item starts from the last frame with the inverse of the last action.
        let r0 = &aug.items[6];
        assert_eq!(r0.provenance, Provenance::Rewound);
        assert_eq!(r0.action, eps[0].actions[5].inverse());
        assert_eq!(r0.target, eps[0].frames[5]);
        assert_eq!(&r0.context[512..], &eps[0].frames[6][..]);
        assert_eq!(r0.original_action(), eps[0].actions[5]);
    }

    #[test]
    fn collided_episode_cannot_be_rewound() {
        let (_, mut eps) = episodes();
        eps[1].collided[2] = true;
        assert_eq!(
            augment_dataset(&eps, 2, 16, 0, "").unwrap_err(),
            DiffusionError::NonInvertibleAction { episode: 1, step: 2 }
        );
    }

    #[test]
    fn container_round_trip() {
        let (map, eps) = episodes();
        let ds = augment_dataset(&eps, 2, 16, 9, &map.content_hash()).unwrap();
        let bytes = ds.to_bytes();
        assert_eq!(&bytes[..4], b"WSF1");
        let back = TransitionDataset::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.items[7].target, ds.items[7].target);
        assert!(TransitionDataset::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
