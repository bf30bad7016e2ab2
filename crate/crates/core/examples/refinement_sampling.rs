//! Base ancestral sampling against the refinement sampler, which re-noises
//! its first estimate to an intermediate step and denoises it again.
//!
//!     cargo run --release --example refinement_sampling -- [checkpoint.json]

use std::path::Path;
use std::sync::Arc;

use wsbench::action::Action;
use wsbench::diffusion::{
    build_dataset, generate_episodes, train, Checkpoint, Denoiser, DenoiserConfig, DiffusionWorldModel,
    SamplerConfig, TrainConfig,
};
use wsbench::env::{fixture, RenderConfig};
use wsbench::harness::{ablation_csv, compare_samplers, EvalEnv, ProtocolConfig};
use wsbench::model::WorldModel;
use wsbench::rng::seeded;

fn main() {
    let map = fixture("room3").unwrap();
    let render = RenderConfig::default();
    let model = match std::env::args().nth(1) {
        Some(p) => Checkpoint::load(Path::new(&p)).unwrap().model,
        None => {
            let eps = generate_episodes(&map, &render, 16, 48, 16, 1).unwrap();
            let ds = build_dataset(&eps, 4, 16, false, 1, "").unwrap();
            let cfg = DenoiserConfig {
                hidden: 128,
                ..DenoiserConfig::default()
            };
            let mut m = Denoiser::new(cfg, &mut seeded(7)).unwrap();
            println!("training a small model...");
            train(&mut m, &ds, &TrainConfig { epochs: 60, seed: 7, ..TrainConfig::default() }).unwrap();
            m
        }
    };

    let refine = SamplerConfig::refine();
    let (sigma, t_ref) = refine.resolve(&model).unwrap();
    println!("refinement: re-noise to step {t_ref} of {} with sigma {sigma:.3}", model.schedule().steps());

    let model = Arc::new(model);
    let (mb, mr) = (model.clone(), model);
    let base = move || Box::new(DiffusionWorldModel::new(mb.clone(), SamplerConfig::default()).unwrap()) as Box<dyn WorldModel>;
    let refined = move || Box::new(DiffusionWorldModel::new(mr.clone(), refine).unwrap()) as Box<dyn WorldModel>;

    let env = EvalEnv::new(map, render);
    let cfg = ProtocolConfig::new(Action::TurnLeft, 8, 20);
    let cmp = compare_samplers(&base, &refined, &env, &cfg, 1).unwrap();
    println!("axis 0 = base, 1 = refinement");
    print!("{}", ablation_csv(&cmp.ablation));
    for d in &cmp.deltas {
        println!(
            "{}: paired refine - base discrepancy {:+.5}, ws {:+.4} over {} episodes",
            d.metric,
            d.discrepancy.unwrap_or(f64::NAN),
            d.ws.unwrap_or(f64::NAN),
            d.pairs
        );
    }
}
