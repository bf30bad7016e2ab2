use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use super::MetricError;
use crate::frame::{Frame, CHANNELS};

/// Patch grid used by [`EmbeddingProvider::PatchStats`] (per side).
pub const PATCH_GRID: usize = 4;

/// Feature extractor `f` for the cosine embedding distance.
#[derive(Debug, Clone)]
pub enum EmbeddingProvider {
    /// Per-patch, per-channel mean and standard deviation over a 4x4 patch
    /// grid plus a trailing constant `1.0` (97 dims for RGB).
    PatchStats,
    /// Vectors computed elsewhere, keyed by [`Frame::fingerprint`].
    External(ExternalEmbeddings),
}

impl EmbeddingProvider {
    pub fn name(&self) -> &'static str {
        match self {
            EmbeddingProvider::PatchStats => "patch",
            EmbeddingProvider::External(_) => "external",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbeddingProvider::PatchStats => PATCH_GRID * PATCH_GRID * CHANNELS * 2 + 1,
            EmbeddingProvider::External(e) => e.dim,
        }
    }

    pub fn embed(&self, frame: &Frame) -> Result<Vec<f64>, MetricError> {
        match self {
            EmbeddingProvider::PatchStats => Ok(patch_stats(frame)),
            EmbeddingProvider::External(e) => {
                let key = frame.fingerprint();
                e.vectors
                    .get(&key)
                    .cloned()
                    .ok_or(MetricError::MissingEmbedding(key))
            }
        }
    }
}

fn patch_stats(frame: &Frame) -> Vec<f64> {
    let (h, w) = frame.dims();
    let mut out = Vec::with_capacity(PATCH_GRID * PATCH_GRID * CHANNELS * 2 + 1);
    for pr in 0..PATCH_GRID {
        let (r0, r1) = (pr * h / PATCH_GRID, (pr + 1) * h / PATCH_GRID);
        for pc in 0..PATCH_GRID {
            let (c0, c1) = (pc * w / PATCH_GRID, (pc + 1) * w / PATCH_GRID);
            let n = ((r1 - r0) * (c1 - c0)).max(1) as f64;
            for ch in 0..CHANNELS {
                let mut sum = 0.0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        sum += frame.pixel(r, c)[ch];
                    }
                }
                let mean = sum / n;
                let mut var = 0.0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        let d = frame.pixel(r, c)[ch] - mean;
                        var += d * d;
                    }
                }
                out.push(mean);
                out.push((var / n).sqrt());
            }
        }
    }
    out.push(1.0);
    out
}

/// Embedding vectors loaded from a JSON object `{frameId: [floats]}`.
#[derive(Debug, Clone)]
pub struct ExternalEmbeddings {
    dim: usize,
    vectors: Arc<HashMap<String, Vec<f64>>>,
}

impl ExternalEmbeddings {
    pub fn new(vectors: HashMap<String, Vec<f64>>) -> Result<Self, MetricError> {
        let dim = match vectors.values().next() {
            Some(v) => v.len(),
            None => return Err(MetricError::BadEmbeddings("no vectors".into())),
        };
        if dim == 0 {
            return Err(MetricError::BadEmbeddings("zero-length vectors".into()));
        }
        for (k, v) in &vectors {
            if v.len() != dim {
                return Err(MetricError::BadEmbeddings(format!(
                    "vector {k} has length {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(MetricError::BadEmbeddings(format!("vector {k} is not finite")));
            }
            if v.iter().all(|&x| x == 0.0) {
                return Err(MetricError::BadEmbeddings(format!("vector {k} is all zeros")));
            }
        }
        Ok(Self {
            dim,
            vectors: Arc::new(vectors),
        })
    }

    pub fn from_json(s: &str) -> Result<Self, MetricError> {
        let map: HashMap<String, Vec<f64>> =
            serde_json::from_str(s).map_err(|e| MetricError::BadEmbeddings(e.to_string()))?;
        Self::new(map)
    }

    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::BadEmbeddings(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Cosine similarity clamped to `[-1, 1]`; zero vectors give 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na2: f64 = a.iter().map(|x| x * x).sum();
    let nb2: f64 = b.iter().map(|x| x * x).sum();
    if na2 == 0.0 || nb2 == 0.0 {
        return 0.0;
    }
    // A single square root keeps cos(v, v) at exactly 1.
    (dot / (na2 * nb2).sqrt()).clamp(-1.0, 1.0)
}

/// `1 - cos(f(x), f(y))`, in `[0, 2]`.
pub fn d_cos_embed(x: &Frame, y: &Frame, f: &EmbeddingProvider) -> Result<f64, MetricError> {
    if x.dims() != y.dims() {
        return Err(MetricError::ShapeMismatch {
            a: x.dims(),
            b: y.dims(),
        });
    }
    let ex = f.embed(x)?;
    let ey = f.embed(y)?;
    if ex == ey {
        return Ok(0.0);
    }
    Ok((1.0 - cosine(&ex, &ey)).clamp(0.0, 2.0))
}
