//! Seeded procedural maps.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, Decor, Dir, EnvError, MazeMap};

const WALL_COLORS: [[f64; 3]; 4] = [
    [0.80, 0.20, 0.20],
    [0.20, 0.70, 0.30],
    [0.20, 0.30, 0.90],
    [0.90, 0.85, 0.30],
];
const DECOR_COLORS: [[f64; 3]; 4] = [
    [1.00, 1.00, 1.00],
    [0.10, 0.10, 0.10],
    [0.00, 0.90, 0.90],
    [0.95, 0.40, 0.85],
];

fn default_palette() -> BTreeMap<u8, [f64; 3]> {
    let mut p = BTreeMap::new();
    for (i, c) in WALL_COLORS.iter().enumerate() {
        p.insert(1 + i as u8, *c);
    }
    for (i, c) in DECOR_COLORS.iter().enumerate() {
        p.insert(5 + i as u8, *c);
    }
    p
}

/// Recursive-backtracker maze over `cells_w x cells_h` logical cells, giving
/// a `(2*cells_w + 1) x (2*cells_h + 1)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSpec {
    pub cells_w: usize,
    pub cells_h: usize,
    pub seed: u64,
    #[serde(default = "default_decor")]
    pub decor: usize,
    /// Probability of knocking out each remaining interior wall between two
    /// logical cells, adding loops.
    #[serde(default)]
    pub braid: f64,
}

/// Open rectangular room with scattered single-cell pillars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    #[serde(default)]
    pub pillars: usize,
    #[serde(default = "default_decor")]
    pub decor: usize,
}

fn default_decor() -> usize {
    6
}

pub fn generate_maze(spec: &MazeSpec) -> Result<MazeMap, EnvError> {
    if spec.cells_w == 0 || spec.cells_h == 0 {
        return Err(EnvError::InvalidMap("maze needs at least one cell".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w = 2 * spec.cells_w + 1;
    let h = 2 * spec.cells_h + 1;
    let mut open = vec![false; w * h];
    let mut visited = vec![false; spec.cells_w * spec.cells_h];
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    open[w + 1] = true;
    while let Some(&(cx, cy)) = stack.last() {
        let mut next: Vec<(usize, usize)> = Vec::new();
        if cx > 0 {
            next.push((cx - 1, cy));
        }
        if cy > 0 {
            next.push((cx, cy - 1));
        }
        if cx + 1 < spec.cells_w {
            next.push((cx + 1, cy));
        }
        if cy + 1 < spec.cells_h {
            next.push((cx, cy + 1));
        }
        next.retain(|&(x, y)| !visited[y * spec.cells_w + x]);
        if next.is_empty() {
            stack.pop();
            continue;
        }
        let (nx, ny) = next[rng.random_range(0..next.len())];
        visited[ny * spec.cells_w + nx] = true;
        let (gx, gy) = (2 * nx + 1, 2 * ny + 1);
        open[gy * w + gx] = true;
        open[(cy + ny + 1) * w + (cx + nx + 1)] = true;
        stack.push((nx, ny));
    }
    if spec.braid > 0.0 {
        for gy in 1..h - 1 {
            for gx in 1..w - 1 {
                // Walls between two logical cells sit at one odd and one even coordinate.
                let between = (gx % 2 == 1) != (gy % 2 == 1);
                if between && !open[gy * w + gx] && rng.random_bool(spec.braid.min(1.0)) {
                    open[gy * w + gx] = true;
                }
            }
        }
    }
    finish(w, h, open, spec.decor, &mut rng)
}

pub fn generate_arena(spec: &ArenaSpec) -> Result<MazeMap, EnvError> {
    if spec.width < 3 || spec.height < 3 {
        return Err(EnvError::InvalidMap("arena must be at least 3x3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let mut open = vec![false; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            open[y * w + x] = true;
        }
    }
    let mut interior: Vec<usize> = (0..w * h).filter(|&i| open[i]).collect();
    interior.shuffle(&mut rng);
    let keep_floor = 1;
    for &i in interior.iter().take(spec.pillars.min(interior.len().saturating_sub(keep_floor))) {
        open[i] = false;
    }
    finish(w, h, open, spec.decor, &mut rng)
}

fn finish(
    w: usize,
    h: usize,
    open: Vec<bool>,
    decor_count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MazeMap, EnvError> {
    let mut cells = Vec::with_capacity(w * h);
    for &o in &open {
        cells.push(if o {
            Cell::Floor
        } else {
            Cell::Wall(rng.random_range(1..=WALL_COLORS.len() as u8))
        });
    }
    let is_floor = |x: i32, y: i32| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && open[y as usize * w + x as usize]
    };
    let mut faces = Vec::new();
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if is_floor(x, y) {
                continue;
            }
            for face in Dir::ALL {
                let (dx, dy) = face.delta();
                if is_floor(x + dx, y + dy) {
                    faces.push((x, y, face));
                }
            }
        }
    }
    faces.shuffle(rng);
    let decor = faces
        .into_iter()
        .take(decor_count)
        .map(|(x, y, face)| Decor {
            x,
            y,
            face,
            color: 5 + rng.random_range(0..DECOR_COLORS.len() as u8),
        })
        .collect();
    MazeMap::new(w, h, cells, decor, default_palette())
}
