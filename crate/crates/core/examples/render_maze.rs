//! Generates a maze, renders a short rollout and writes the frames as PPM.
//!
//!     cargo run --example render_maze -- [output_dir]

use std::path::PathBuf;

use wsbench::env::{generate_maze, rollout, MazeSpec, Pose, RenderConfig};

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wsbench-render"));
    std::fs::create_dir_all(&out).unwrap();

    let map = generate_maze(&MazeSpec {
        cells_w: 4,
        cells_h: 4,
        seed: 11,
        decor: 6,
        braid: 0.2,
    })
    .unwrap();
    println!("{}x{} maze, {} decor markers, hash {}", map.width(), map.height(), map.decor().len(), &map.content_hash()[..12]);

    let (x, y) = map.floor_cells()[0];
    let start = Pose::new(x, y, 0);
    let cfg = RenderConfig::default();
    let r = rollout(&map, start, &"RRRRRRFFLLLLLLF".parse().unwrap(), &cfg).unwrap();
    for (i, (frame, pose)) in r.frames.iter().zip(&r.poses).enumerate() {
        let path = out.join(format!("frame_{i:02}.ppm"));
        std::fs::write(&path, frame.to_ppm()).unwrap();
        println!("{:?} -> {}", pose, path.display());
    }
    if r.any_collision {
        println!("(some moves hit walls and left the pose unchanged)");
    }
}
