//! CSV renderings of episode and ablation results.

use super::{AblationResult, EpisodeResult};

pub const EPISODE_CSV_HEADER: &str = "episode,metric,discrepancy,dynamics,ws,degenerate,psnr";
pub const ABLATION_CSV_HEADER: &str = "axisValue,metric,mean_ws,std_ws,mean_disc,mean_dyn";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (episode, metric). Degenerate rows leave `ws` empty.
pub fn episodes_csv(results: &[EpisodeResult]) -> String {
    let mut out = String::from(EPISODE_CSV_HEADER);
    out.push('\n');
    for r in results {
        for m in &r.metrics {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.episode,
                m.metric,
                m.discrepancy,
                m.dynamics,
                opt(m.ws),
                m.degenerate(),
                r.psnr
            ));
        }
    }
    out
}

/// One row per (axis value, metric), sorted by axis value. Statistics over
/// all-degenerate points are left empty.
pub fn ablation_csv(result: &AblationResult) -> String {
    let mut out = String::from(ABLATION_CSV_HEADER);
    out.push('\n');
    let mut points: Vec<_> = result.points.iter().collect();
    points.sort_by_key(|p| p.axis_value);
    for p in points {
        for s in &p.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.axis_value,
                s.metric,
                opt(s.ws.map(|x| x.mean)),
                opt(s.ws.map(|x| x.std)),
                opt(s.discrepancy.map(|x| x.mean)),
                opt(s.dynamics.map(|x| x.mean)),
            ));
        }
    }
    out
}
