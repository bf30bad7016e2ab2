//! Scores the reference models: the oracle is perfectly stable, drift and
//! noise are not, and a frozen model is degenerate.

use wsbench::action::Action;
use wsbench::env::{fixture, RenderConfig};
use wsbench::harness::{aggregate, run_episodes, EvalEnv, ProtocolConfig};
use wsbench::metrics::{DistanceMetric, EmbeddingProvider};
use wsbench::model::{DriftModel, DriftParams, FrozenModel, ModelFactory, NoisyModel, OracleModel, WorldModel};

fn main() {
    let env = EvalEnv::new(fixture("room3").unwrap(), RenderConfig::default());
    let mut cfg = ProtocolConfig::new(Action::TurnRight, 4, 20);
    cfg.metrics = vec![
        DistanceMetric::Mse,
        DistanceMetric::Ssim,
        DistanceMetric::EmbedCos(EmbeddingProvider::PatchStats),
    ];

    let colour = DriftParams {
        color_drift_rate: 0.05,
        ..DriftParams::default()
    };
    let models: Vec<(&str, Box<dyn ModelFactory>)> = vec![
        ("oracle", Box::new(|| Box::new(OracleModel::new()) as Box<dyn WorldModel>)),
        ("drift yaw+2", Box::new(|| Box::new(DriftModel::new(DriftParams::yaw(2)).unwrap()) as Box<dyn WorldModel>)),
        ("drift colour", Box::new(move || Box::new(DriftModel::new(colour.clone()).unwrap()) as Box<dyn WorldModel>)),
        ("noisy 0.05", Box::new(|| Box::new(NoisyModel::new(0.05).unwrap()) as Box<dyn WorldModel>)),
        ("frozen", Box::new(|| Box::new(FrozenModel) as Box<dyn WorldModel>)),
    ];
    for (name, factory) in &models {
        let results = run_episodes(factory.as_ref(), &env, &cfg, 1).unwrap();
        println!("{name}");
        for s in aggregate(&results).unwrap() {
            match s.ws {
                Some(ws) => println!("  {:>10}: ws {:.4} +- {:.4}", s.metric, ws.mean, ws.std),
                None => println!("  {:>10}: all {} episodes degenerate", s.metric, s.episodes),
            }
        }
    }
}
