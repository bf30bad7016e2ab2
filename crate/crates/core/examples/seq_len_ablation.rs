//! Discrepancy and dynamics against probe length for a model whose palette
//! drifts a little every step, written as CSV and an SVG plot.
//!
//!     cargo run --example seq_len_ablation -- [output_dir]

use std::path::PathBuf;

use wsbench::action::Action;
use wsbench::env::{fixture, RenderConfig};
use wsbench::harness::{ablate_seq_len, ablation_csv, EvalEnv, ProtocolConfig};
use wsbench::model::{DriftModel, DriftParams, WorldModel};
use wsbench::svg::{line_plot, Series};

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wsbench-ablation"));
    std::fs::create_dir_all(&out).unwrap();

    let env = EvalEnv::new(fixture("room3").unwrap(), RenderConfig::default());
    let cfg = ProtocolConfig::new(Action::TurnRight, 1, 20);
    let params = DriftParams {
        color_drift_rate: 0.01,
        ..DriftParams::default()
    };
    let factory = move || Box::new(DriftModel::new(params.clone()).unwrap()) as Box<dyn WorldModel>;
    let result = ablate_seq_len(&factory, &env, &cfg, &[1, 2, 4, 8, 12], 1).unwrap();

    let csv = ablation_csv(&result);
    print!("{csv}");
    let curve = |f: fn(&wsbench::harness::MetricSummary) -> f64| {
        result
            .points
            .iter()
            .map(|p| (p.axis_value as f64, f(&p.summary[0])))
            .collect::<Vec<_>>()
    };
    let svg = line_plot(
        "drift model: 1% palette shift per step",
        "sequence length N",
        "mean MSE",
        &[
            Series::new("discrepancy", curve(|s| s.discrepancy.map_or(f64::NAN, |x| x.mean))),
            Series::new("dynamics", curve(|s| s.dynamics.map_or(f64::NAN, |x| x.mean))),
        ],
    );
    std::fs::write(out.join("ablation.csv"), csv).unwrap();
    std::fs::write(out.join("ablation.svg"), svg).unwrap();
    println!("wrote {}", out.display());
}
