use serde::{Deserialize, Serialize};

use super::DiffusionError;

/// Linear beta schedule over `steps` diffusion steps.
///
/// Indexing is 1-based for `beta`/`alpha` (`t in 1..=K`); `alpha_bar(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            steps: 16,
            beta_start: 1e-4,
            beta_end: 0.2,
        }
    }
}

impl NoiseSchedule {
    pub fn new(p: ScheduleParams) -> Result<Self, DiffusionError> {
        let ScheduleParams {
            steps,
            beta_start,
            beta_end,
        } = p;
        if steps == 0 {
            return Err(DiffusionError::InvalidConfig("schedule needs at least one step".into()));
        }
        let valid = |b: f64| b > 0.0 && b < 1.0;
        if !valid(beta_start) || !valid(beta_end) || beta_end < beta_start {
            return Err(DiffusionError::InvalidConfig(format!(
                "betas must satisfy 0 < start <= end < 1, got {beta_start}..{beta_end}"
            )));
        }
        let betas: Vec<f64> = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(steps + 1);
        alpha_bars.push(1.0);
        let mut acc = 1.0;
        for a in &alphas {
            acc *= a;
            alpha_bars.push(acc);
        }
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    /// `sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps`.
    pub fn q_sample(&self, x0: &[f64], t: usize, eps: &[f64]) -> Result<Vec<f64>, DiffusionError> {
        if x0.len() != eps.len() {
            return Err(DiffusionError::DimensionMismatch(format!(
                "x0 has {} values, eps has {}",
                x0.len(),
                eps.len()
            )));
        }
        if t > self.steps() {
            return Err(DiffusionError::DimensionMismatch(format!(
                "step {t} beyond schedule length {}",
                self.steps()
            )));
        }
        let ab = self.alpha_bar(t);
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
    }
}
