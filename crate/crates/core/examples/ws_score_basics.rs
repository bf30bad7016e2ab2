//! The WS ratio from raw distances and from rendered frames.

use wsbench::env::{fixture, render, Pose, RenderConfig};
use wsbench::metrics::{psnr, ws_from_distances, DistanceMetric, EmbeddingProvider, MetricError};

fn main() {
    // ws = 2 d(x1, x1dag) / (d(x1, xbar) + d(x1dag, xbar))
    let r = ws_from_distances("mse", 0.2, 0.5, 0.3).unwrap();
    println!("discrepancy 0.2, legs 0.5 + 0.3 -> ws {} (dynamics {})", r.ws, r.dynamics);
    println!("perfect return -> ws {}", ws_from_distances("mse", 0.0, 0.5, 0.3).unwrap().ws);
    match ws_from_distances("mse", 0.1, 0.0, 0.0) {
        Err(MetricError::DegenerateDynamics { sum }) => println!("no motion (sum {sum}) -> degenerate, not scored"),
        other => println!("unexpected {other:?}"),
    }

    // A model that turned 3 ticks left, then came back only 2.
    let map = fixture("room3").unwrap();
    let cfg = RenderConfig::default();
    let x1 = render(&map, &Pose::new(2, 2, 0), &cfg);
    let xbar = render(&map, &Pose::new(2, 2, 21), &cfg);
    let x1dag = render(&map, &Pose::new(2, 2, 23), &cfg);
    for m in [
        DistanceMetric::Mse,
        DistanceMetric::Ssim,
        DistanceMetric::EmbedCos(EmbeddingProvider::PatchStats),
    ] {
        let (d, a, b) = (
            m.distance(&x1, &x1dag).unwrap(),
            m.distance(&x1, &xbar).unwrap(),
            m.distance(&x1dag, &xbar).unwrap(),
        );
        let ws = ws_from_distances(&m.name(), d, a, b).unwrap().ws;
        println!("{:>10}: discrepancy {d:.5}, legs {a:.5} + {b:.5}, ws {ws:.4}", m.name());
    }
    println!("psnr(x1, x1dag) = {:.2} dB", psnr(&x1, &x1dag).unwrap());
}
