//! Deterministic ground-truth maze world: map, pose dynamics and renderer.

mod fixtures;
mod generate;
mod map;
mod render;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, ActionSequence, HEADINGS};
use crate::frame::Frame;

pub use fixtures::{fixture, fixture_names};
pub use generate::{generate_arena, generate_maze, ArenaSpec, MazeSpec};
pub use map::{Cell, Decor, Dir, MapFile, MazeMap};
pub use render::{render, render_with_visibility, RenderConfig, Visibility};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid pose {pose:?}: {reason}")]
    InvalidPose { pose: Pose, reason: String },
    #[error("no start pose admits a collision-free run of probe {probe}")]
    NoValidStart { probe: String },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("I/O error: {0}")]
    Io(String),
}

/// Agent state: integer cell and one of 24 headings (15 degree steps).
/// Heading 0 faces east; each `TurnRight` adds one tick (clockwise when
/// viewed from above with `y` pointing south).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pose {
    pub x: i32,
    pub y: i32,
    pub heading: u8,
}

impl Pose {
    pub fn new(x: i32, y: i32, heading: u8) -> Self {
        Self { x, y, heading }
    }

    pub fn validate(&self, map: &MazeMap) -> Result<(), EnvError> {
        if self.heading >= HEADINGS {
            return Err(EnvError::InvalidPose {
                pose: *self,
                reason: format!("heading must be below {HEADINGS}"),
            });
        }
        if !map.is_floor(self.x, self.y) {
            return Err(EnvError::InvalidPose {
                pose: *self,
                reason: "not on a floor cell".into(),
            });
        }
        Ok(())
    }

    /// Heading in radians.
    pub fn angle(&self) -> f64 {
        (self.heading as f64) * std::f64::consts::PI / 12.0
    }

    /// Axis direction used for translation: the heading rounded to the
    /// nearest multiple of 90 degrees (ties round clockwise).
    pub fn axis(&self) -> Dir {
        Dir::ALL[((self.heading as usize + 3) / 6) % 4]
    }

    pub fn rotated(&self, ticks: i32) -> Pose {
        let h = (self.heading as i32 + ticks).rem_euclid(HEADINGS as i32) as u8;
        Pose { heading: h, ..*self }
    }
}

/// Outcome of a single [`step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub pose: Pose,
    pub collided: bool,
}

/// Applies one action. A blocked move leaves the pose unchanged.
pub fn step(map: &MazeMap, pose: Pose, action: Action) -> Result<StepOutcome, EnvError> {
    pose.validate(map)?;
    Ok(step_unchecked(map, pose, action))
}

pub(crate) fn step_unchecked(map: &MazeMap, pose: Pose, action: Action) -> StepOutcome {
    let moved = |sign: i32| {
        let (dx, dy) = pose.axis().delta();
        let (nx, ny) = (pose.x + sign * dx, pose.y + sign * dy);
        if map.is_floor(nx, ny) {
            StepOutcome {
                pose: Pose { x: nx, y: ny, ..pose },
                collided: false,
            }
        } else {
            StepOutcome {
                pose,
                collided: true,
            }
        }
    };
    match action {
        Action::TurnLeft => StepOutcome {
            pose: pose.rotated(-1),
            collided: false,
        },
        Action::TurnRight => StepOutcome {
            pose: pose.rotated(1),
            collided: false,
        },
        Action::Forward => moved(1),
        Action::Backward => moved(-1),
        Action::Noop => StepOutcome {
            pose,
            collided: false,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub poses: Vec<Pose>,
    pub frames: Vec<Frame>,
    pub collisions: Vec<bool>,
    pub any_collision: bool,
}

/// Steps through `actions`, rendering every visited pose (including `start`).
pub fn rollout(
    map: &MazeMap,
    start: Pose,
    actions: &ActionSequence,
    cfg: &RenderConfig,
) -> Result<Rollout, EnvError> {
    start.validate(map)?;
    let (poses, collisions) = trace_poses(map, start, actions);
    let frames = poses.iter().map(|p| render(map, p, cfg)).collect();
    let any_collision = collisions.iter().any(|&c| c);
    Ok(Rollout {
        poses,
        frames,
        collisions,
        any_collision,
    })
}

/// Pose-only rollout: `(poses, per-step collision flags)`.
pub fn trace_poses(map: &MazeMap, start: Pose, actions: &ActionSequence) -> (Vec<Pose>, Vec<bool>) {
    let mut poses = Vec::with_capacity(actions.len() + 1);
    let mut collisions = Vec::with_capacity(actions.len());
    poses.push(start);
    let mut p = start;
    for &a in actions {
        let out = step_unchecked(map, p, a);
        p = out.pose;
        poses.push(p);
        collisions.push(out.collided);
    }
    (poses, collisions)
}

/// Every valid pose whose rollout of `probe` never collides, in scan order
/// (row, column, heading).
pub fn valid_starts(map: &MazeMap, probe: &ActionSequence) -> Vec<Pose> {
    let mut out = Vec::new();
    for (x, y) in map.floor_cells() {
        for heading in 0..HEADINGS {
            let p = Pose { x, y, heading };
            let (_, collisions) = trace_poses(map, p, probe);
            if !collisions.iter().any(|&c| c) {
                out.push(p);
            }
        }
    }
    out
}

/// Uniformly samples a start pose admitting a collision-free probe.
pub fn sample_start<R: Rng + ?Sized>(
    map: &MazeMap,
    rng: &mut R,
    probe: &ActionSequence,
) -> Result<Pose, EnvError> {
    let candidates = valid_starts(map, probe);
    if candidates.is_empty() {
        return Err(EnvError::NoValidStart {
            probe: probe.to_string(),
        });
    }
    Ok(candidates[rng.random_range(0..candidates.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noop_is_identity() {
        let map = fixture("room3").unwrap();
        let p = Pose::new(2, 2, 5);
        assert_eq!(
            step(&map, p, Action::Noop).unwrap(),
            StepOutcome {
                pose: p,
                collided: false
            }
        );
    }

    #[test]
    fn turns_cancel() {
        let map = fixture("room3").unwrap();
        for h in 0..HEADINGS {
            let p = Pose::new(1, 1, h);
            let left = step(&map, p, Action::TurnLeft).unwrap().pose;
            assert_eq!(step(&map, left, Action::TurnRight).unwrap().pose, p);
        }
    }

    #[test]
    fn forward_into_wall_collides() {
        let map = fixture("room3").unwrap();
        // (1, 1) is the north-west interior corner; heading 18 faces north.
        let p = Pose::new(1, 1, 18);
        assert_eq!(
            step(&map, p, Action::Forward).unwrap(),
            StepOutcome {
                pose: p,
                collided: true
            }
        );
    }

    #[test]
    fn invalid_pose_rejected() {
        let map = fixture("room3").unwrap();
        assert!(matches!(
            step(&map, Pose::new(0, 0, 0), Action::Noop),
            Err(EnvError::InvalidPose { .. })
        ));
        assert!(matches!(
            step(&map, Pose::new(1, 1, 24), Action::Noop),
            Err(EnvError::InvalidPose { .. })
        ));
    }

    #[test]
    fn empty_rollout_renders_start() {
        let map = fixture("room3").unwrap();
        let cfg = RenderConfig::default();
        let p = Pose::new(2, 2, 3);
        let r = rollout(&map, p, &ActionSequence::empty(), &cfg).unwrap();
        assert_eq!(r.frames.len(), 1);
        assert_eq!(r.frames[0], render(&map, &p, &cfg));
    }

    #[test]
    fn rotation_probe_returns_home() {
        let map = fixture("room3").unwrap();
        let cfg = RenderConfig::default();
        let probe = ActionSequence::probe(Action::TurnLeft, 7).unwrap();
        for h in 0..HEADINGS {
            let p = Pose::new(2, 1, h);
            let r = rollout(&map, p, &probe, &cfg).unwrap();
            assert!(!r.any_collision);
            assert_eq!(*r.poses.last().unwrap(), p);
            assert_eq!(r.frames.len(), probe.len() + 1);
            assert_eq!(r.frames.last(), r.frames.first());
        }
    }

    #[test]
    fn translation_probe_in_corridor() {
        // Hand-built corridor: three floor cells in a row.
        let map = MazeMap::from_json(
            r#"{"width":5,"height":3,"rows":["11111","1...1","11111"],"palette":{"1":[0.5,0.5,0.5]}}"#,
        )
        .unwrap();
        let probe = ActionSequence::probe(Action::Forward, 2).unwrap();
        let p = Pose::new(1, 1, 0);
        let (poses, coll) = trace_poses(&map, p, &probe);
        assert_eq!(
            poses.iter().map(|q| q.x).collect::<Vec<_>>(),
            vec![1, 2, 3, 2, 1]
        );
        assert!(coll.iter().all(|&c| !c));
        assert_eq!(*poses.last().unwrap(), p);
    }

    #[test]
    fn sample_start_cases() {
        let tiny = fixture("tiny_cell").unwrap();
        let rot = ActionSequence::probe(Action::TurnLeft, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_start(&tiny, &mut rng, &rot).is_ok());

        let fwd = ActionSequence::probe(Action::Forward, 10).unwrap();
        assert!(matches!(
            sample_start(&tiny, &mut rng, &fwd),
            Err(EnvError::NoValidStart { .. })
        ));

        let map = fixture("room3").unwrap();
        let a = sample_start(&map, &mut ChaCha8Rng::seed_from_u64(11), &rot).unwrap();
        let b = sample_start(&map, &mut ChaCha8Rng::seed_from_u64(11), &rot).unwrap();
        assert_eq!(a, b);
    }
}
