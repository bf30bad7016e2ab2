//! Inverse-action fine-tuning: augments walks with their rewound halves,
//! learns an inverse embedding table and compares it to the forward table.
//!
//!     cargo run --release --example irp_heatmap -- [base_checkpoint.json]
//!
//! Without a checkpoint a small base model is trained first. The bigger the
//! base model, the cleaner the diagonal.

use std::path::Path;

use wsbench::diffusion::{
    augment_dataset, build_dataset, embedding_heatmap, finetune_irp, generate_episodes, train, Checkpoint,
    Denoiser, DenoiserConfig, TrainConfig,
};
use wsbench::env::{fixture, RenderConfig};
use wsbench::rng::seeded;
use wsbench::svg;

fn main() {
    let map = fixture("room3").unwrap();
    let render = RenderConfig::default();
    let eps = generate_episodes(&map, &render, 16, 48, 16, 1).unwrap();

    let mut model = match std::env::args().nth(1) {
        Some(p) => Checkpoint::load(Path::new(&p)).unwrap().model,
        None => {
            let ds = build_dataset(&eps, 4, 16, false, 1, "").unwrap();
            let cfg = DenoiserConfig {
                hidden: 192,
                ..DenoiserConfig::default()
            };
            let mut m = Denoiser::new(cfg, &mut seeded(7)).unwrap();
            let tc = TrainConfig {
                epochs: 80,
                seed: 7,
                ..TrainConfig::default()
            };
            println!("training base model ({} transitions)...", ds.len());
            train(&mut m, &ds, &tc).unwrap();
            m
        }
    };

    let aug = augment_dataset(&eps, model.config().context, model.config().frame_side, 1, "").unwrap();
    println!("fine-tuning on {} transitions ({} rewound)", aug.len(), aug.rewound_count());
    let tc = TrainConfig {
        epochs: 10,
        seed: 7,
        ..TrainConfig::default()
    };
    let report = finetune_irp(&mut model, &aug, &tc).unwrap();
    println!("final fine-tune loss {:.4}", report.final_loss().unwrap());

    let h = embedding_heatmap(&model).unwrap();
    print!("{}", h.to_csv());
    println!(
        "diagonal mean {:.3}, off-diagonal mean {:.3}, row argmax on the true inverse {}/4",
        h.diagonal_mean(),
        h.off_diagonal_mean(),
        h.inverse_hits()
    );
    let rows: Vec<String> = h.rows.iter().map(|a| format!("E_inv[{a:?}]")).collect();
    let cols: Vec<String> = h.cols.iter().map(|a| format!("E[{a:?}]")).collect();
    let path = std::env::temp_dir().join("wsbench-heatmap.svg");
    std::fs::write(&path, svg::heatmap("inverse vs forward embeddings", &rows, &cols, &h.values)).unwrap();
    println!("heatmap -> {}", path.display());
}
