//! Trains the toy diffusion world model on random walks in room3 and
//! reports held-out one-step noise-prediction error before and after.
//!
//!     cargo run --release --example train_toy_diffusion            # quick: 128 units, 60 epochs
//!     cargo run --release --example train_toy_diffusion -- --full  # 512 units, 200 epochs (~3 min)

use std::time::Instant;

use wsbench::diffusion::{
    build_dataset, generate_episodes, heldout_eps_mse, train, Checkpoint, CheckpointMetadata, Denoiser,
    DenoiserConfig, TrainConfig,
};
use wsbench::env::{fixture, RenderConfig};
use wsbench::rng::seeded;

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let (hidden, epochs) = if full { (512, 200) } else { (128, 60) };

    let map = fixture("room3").unwrap();
    let render = RenderConfig::default();
    let hash = map.content_hash();
    let train_eps = generate_episodes(&map, &render, 16, 48, 16, 1).unwrap();
    let ds = build_dataset(&train_eps, 4, 16, false, 1, &hash).unwrap();
    let held = build_dataset(&generate_episodes(&map, &render, 16, 8, 16, 2).unwrap(), 4, 16, false, 2, &hash).unwrap();
    println!("{} training / {} held-out transitions", ds.len(), held.len());

    let cfg = DenoiserConfig {
        hidden,
        ..DenoiserConfig::default()
    };
    let mut model = Denoiser::new(cfg, &mut seeded(7)).unwrap();
    let before = heldout_eps_mse(&model, &held, 99).unwrap();

    let t = Instant::now();
    let tc = TrainConfig {
        epochs,
        seed: 7,
        ..TrainConfig::default()
    };
    let report = train(&mut model, &ds, &tc).unwrap();
    for (i, l) in report.loss_curve.iter().enumerate() {
        if i % (epochs / 10).max(1) == 0 || i + 1 == epochs {
            println!("epoch {:>3}  train loss {l:.4}", i + 1);
        }
    }
    let after = heldout_eps_mse(&model, &held, 99).unwrap();
    println!(
        "held-out eps-MSE {before:.4} -> {after:.4} ({:.2}x) in {:.1}s",
        before / after,
        t.elapsed().as_secs_f64()
    );

    let path = std::env::temp_dir().join("wsbench-toy.json");
    let meta = CheckpointMetadata {
        epochs,
        seed: 7,
        dataset_hash: ds.content_hash(),
        irp_epochs: 0,
    };
    Checkpoint::new(model, meta).save(&path).unwrap();
    println!("checkpoint -> {}", path.display());
}
