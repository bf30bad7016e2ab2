//! Independent re-derivations shared by the integration tests and the
//! acceptance target. Nothing here calls the model or harness code under
//! test: poses are stepped with plain modular arithmetic and distances are
//! straight loops over pixels.

#![allow(dead_code)]

pub mod gradcheck;

use wsbench::action::{Action, ActionSequence};
use wsbench::env::{render, sample_start, ArenaSpec, MazeMap, Pose, RenderConfig};
use wsbench::frame::Frame;
use wsbench::rng::episode_rng;

pub const TICKS: i32 = 24;

/// Open arena large enough for 16-step translation probes.
pub fn open_arena() -> MazeMap {
    wsbench::env::generate_arena(&ArenaSpec {
        width: 22,
        height: 22,
        seed: 5,
        pillars: 3,
        decor: 6,
    })
    .unwrap()
}

/// Heading 0 faces +x, +1 tick turns clockwise (y down); translation goes
/// along the nearest cardinal direction. Blocked moves stay put.
pub fn bf_step(map: &MazeMap, p: Pose, a: Action) -> Pose {
    let h = p.heading as i32;
    let turn = |d: i32| Pose::new(p.x, p.y, (h + d).rem_euclid(TICKS) as u8);
    let cardinal = ((h + 3) / 6) % 4;
    let (dx, dy) = [(1, 0), (0, 1), (-1, 0), (0, -1)][cardinal as usize];
    let mv = |s: i32| {
        let (x, y) = (p.x + s * dx, p.y + s * dy);
        if map.is_floor(x, y) {
            Pose::new(x, y, p.heading)
        } else {
            p
        }
    };
    match a {
        Action::TurnLeft => turn(-1),
        Action::TurnRight => turn(1),
        Action::Forward => mv(1),
        Action::Backward => mv(-1),
        Action::Noop => p,
    }
}

pub fn bf_mse(a: &Frame, b: &Frame) -> f64 {
    let (x, y) = (a.data(), b.data());
    assert_eq!(x.len(), y.len());
    let mut s = 0.0;
    for i in 0..x.len() {
        s += (x[i] - y[i]) * (x[i] - y[i]);
    }
    s / x.len() as f64
}

/// WS for a yaw-biased oracle on one episode: every predicted step applies
/// the action and then `bias` extra clockwise ticks. `None` when degenerate.
pub fn drift_ws(
    map: &MazeMap,
    cfg: &RenderConfig,
    action: Action,
    n: usize,
    bias: i32,
    master_seed: u64,
    episode: u64,
) -> Option<f64> {
    let probe = ActionSequence::probe(action, n).unwrap();
    let mut rng = episode_rng(master_seed, episode);
    let start = sample_start(map, &mut rng, &probe).unwrap();
    let mut p = start;
    let mut poses = vec![start];
    for &a in probe.iter() {
        let q = bf_step(map, p, a);
        p = Pose::new(q.x, q.y, (q.heading as i32 + bias).rem_euclid(TICKS) as u8);
        poses.push(p);
    }
    let x1 = render(map, &start, cfg);
    let xbar = render(map, &poses[n], cfg);
    let xdag = render(map, &poses[2 * n], cfg);
    let den = bf_mse(&x1, &xbar) + bf_mse(&xdag, &xbar);
    (den > 1e-12).then(|| 2.0 * bf_mse(&x1, &xdag) / den)
}
