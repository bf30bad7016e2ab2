mod common;

use common::{bf_step, drift_ws, open_arena};
use proptest::prelude::*;
use wsbench::action::Action;
use wsbench::env::{step, Pose, RenderConfig};
use wsbench::harness::{run_episodes, EvalEnv, ProtocolConfig};
use wsbench::metrics::DistanceMetric;
use wsbench::model::{DriftModel, DriftParams, WorldModel};

fn harness_ws(env: &EvalEnv, action: Action, n: usize, bias: i32, seed: u64) -> Vec<Option<f64>> {
    let factory = move || Box::new(DriftModel::new(DriftParams::yaw(bias)).unwrap()) as Box<dyn WorldModel>;
    let mut cfg = ProtocolConfig::new(action, n, 12);
    cfg.metrics = vec![DistanceMetric::Mse];
    cfg.master_seed = seed;
    run_episodes(&factory, env, &cfg, 1)
        .unwrap()
        .iter()
        .map(|r| r.metrics[0].ws)
        .collect()
}

#[test]
fn drift_matches_brute_force_on_rotations_and_translations() {
    let map = open_arena();
    let env = EvalEnv::new(map.clone(), RenderConfig::default());
    for (action, bias) in [(Action::TurnLeft, 1), (Action::TurnRight, 2), (Action::Forward, 1), (Action::Backward, 3)] {
        let got = harness_ws(&env, action, 4, bias, 11);
        for (e, g) in got.iter().enumerate() {
            let want = drift_ws(&map, &env.render, action, 4, bias, 11, e as u64);
            match (g, want) {
                (Some(g), Some(w)) => assert!((g - w).abs() < 1e-9, "{action:?} bias {bias} ep {e}: {g} vs {w}"),
                (g, w) => assert_eq!(g.is_none(), w.is_none(), "{action:?} ep {e}"),
            }
        }
    }
}

proptest! {
    #[test]
    fn brute_force_step_agrees_with_simulator(x in 1i32..21, y in 1i32..21, h in 0u8..24, ai in 0usize..5) {
        let map = open_arena();
        let p = Pose::new(x, y, h);
        prop_assume!(p.validate(&map).is_ok());
        let a = Action::ALL[ai];
        prop_assert_eq!(step(&map, p, a).unwrap().pose, bf_step(&map, p, a));
    }
}
