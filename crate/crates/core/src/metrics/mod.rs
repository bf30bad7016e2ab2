//! Frame distances and the world-stability (WS) score.
//!
//! For a probe trajectory with initial frame `x1`, midpoint `xbar` (after the
//! forward half) and final frame `x1dag` (after the inverse half):
//!
//! ```text
//! discrepancy = d(x1, x1dag)
//! dynamics    = (d(x1, xbar) + d(x1dag, xbar)) / 2
//! ws          = discrepancy / dynamics
//! ```
//!
//! Lower is better. A trajectory whose dynamics vanish is reported as
//! [`MetricError::DegenerateDynamics`] instead of a number.

mod distance;
mod embed;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Frame;

pub use distance::{d_mse, d_ssim, psnr, SSIM_WINDOW};
pub use embed::{cosine, d_cos_embed, EmbeddingProvider, ExternalEmbeddings, PATCH_GRID};

/// Dynamics sums at or below this are treated as zero.
pub const EPS_DYNAMICS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("frame shapes differ: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("frame {height}x{width} is smaller than the {min}x{min} SSIM window")]
    FrameTooSmall { height: usize, width: usize, min: usize },
    #[error("no external embedding for frame {0}")]
    MissingEmbedding(String),
    #[error("degenerate dynamics: d(x1, xbar) + d(x1dag, xbar) = {sum:e} (model ignores actions?)")]
    DegenerateDynamics { sum: f64 },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("bad embedding file: {0}")]
    BadEmbeddings(String),
}

/// Distance `d` between two frames.
#[derive(Debug, Clone)]
pub enum DistanceMetric {
    Mse,
    Ssim,
    EmbedCos(EmbeddingProvider),
}

impl DistanceMetric {
    pub fn name(&self) -> String {
        match self {
            DistanceMetric::Mse => "mse".into(),
            DistanceMetric::Ssim => "ssim".into(),
            DistanceMetric::EmbedCos(p) => format!("{}_cos", p.name()),
        }
    }

    pub fn distance(&self, x: &Frame, y: &Frame) -> Result<f64, MetricError> {
        match self {
            DistanceMetric::Mse => d_mse(x, y),
            DistanceMetric::Ssim => d_ssim(x, y),
            DistanceMetric::EmbedCos(p) => d_cos_embed(x, y, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsReport {
    pub metric: String,
    pub discrepancy: f64,
    pub dynamics: f64,
    pub ws: f64,
}

/// WS from the three pairwise distances. `to_mid` is `d(x1, xbar)` and
/// `back_to_mid` is `d(x1dag, xbar)`.
pub fn ws_from_distances(
    metric: &str,
    discrepancy: f64,
    to_mid: f64,
    back_to_mid: f64,
) -> Result<WsReport, MetricError> {
    let sum = to_mid + back_to_mid;
    if !(sum > EPS_DYNAMICS) {
        return Err(MetricError::DegenerateDynamics { sum });
    }
    Ok(WsReport {
        metric: metric.to_string(),
        discrepancy,
        dynamics: sum / 2.0,
        ws: 2.0 * discrepancy / sum,
    })
}

pub fn ws_score(
    d: &DistanceMetric,
    x1: &Frame,
    xbar: &Frame,
    x1dag: &Frame,
) -> Result<WsReport, MetricError> {
    let disc = d.distance(x1, x1dag)?;
    let to_mid = d.distance(x1, xbar)?;
    let back = d.distance(x1dag, xbar)?;
    ws_from_distances(&d.name(), disc, to_mid, back)
}

/// Checks that scaling every distance by `c` leaves the WS score unchanged
/// (to within `1e-12`).
pub fn scale_invariance_check(
    d: &DistanceMetric,
    c: f64,
    x1: &Frame,
    xbar: &Frame,
    x1dag: &Frame,
) -> Result<bool, MetricError> {
    if !(c > 0.0) {
        return Err(MetricError::NonPositiveScale(c));
    }
    let disc = d.distance(x1, x1dag)?;
    let to_mid = d.distance(x1, xbar)?;
    let back = d.distance(x1dag, xbar)?;
    let plain = ws_from_distances("", disc, to_mid, back)?;
    let scaled = ws_from_distances("", c * disc, c * to_mid, c * back)?;
    Ok((plain.ws - scaled.ws).abs() <= 1e-12)
}
