//! Stability against context length: one small model per context length,
//! each evaluated with that many ground-truth context frames.
//!
//!     cargo run --release --example context_ablation

use std::collections::BTreeMap;
use std::sync::Arc;

use wsbench::action::Action;
use wsbench::diffusion::{
    build_dataset, generate_episodes, train, Denoiser, DenoiserConfig, DiffusionWorldModel, SamplerConfig,
    TrainConfig,
};
use wsbench::env::{fixture, RenderConfig};
use wsbench::harness::{ablate_context, ablation_csv, EvalEnv, ProtocolConfig};
use wsbench::model::{ModelFactory, WorldModel};
use wsbench::rng::seeded;

fn main() {
    let map = fixture("room3").unwrap();
    let render = RenderConfig::default();
    let eps = generate_episodes(&map, &render, 16, 32, 16, 1).unwrap();

    let mut models: BTreeMap<usize, Box<dyn ModelFactory + Send>> = BTreeMap::new();
    for c in [1, 2, 4] {
        let ds = build_dataset(&eps, c, 16, false, 1, "").unwrap();
        let cfg = DenoiserConfig {
            context: c,
            hidden: 96,
            ..DenoiserConfig::default()
        };
        let mut m = Denoiser::new(cfg, &mut seeded(7)).unwrap();
        let r = train(&mut m, &ds, &TrainConfig { epochs: 40, seed: 7, ..TrainConfig::default() }).unwrap();
        println!("C={c}: final train loss {:.4}", r.final_loss().unwrap());
        let m = Arc::new(m);
        models.insert(
            c,
            Box::new(move || Box::new(DiffusionWorldModel::new(m.clone(), SamplerConfig::default()).unwrap()) as Box<dyn WorldModel>),
        );
    }

    let env = EvalEnv::new(map, render);
    let cfg = ProtocolConfig::new(Action::TurnRight, 4, 12);
    let result = ablate_context(&models, &env, &cfg, 1).unwrap();
    print!("{}", ablation_csv(&result));
}
