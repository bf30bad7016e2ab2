use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EpisodeInit, ModelError, WorldModel};
use crate::action::Action;
use crate::env::{render, render_with_visibility, step, MazeMap, Pose, RenderConfig};
use crate::frame::Frame;
use crate::rng::Rng;

#[derive(Debug, Clone)]
struct Hidden {
    map: Arc<MazeMap>,
    pose: Pose,
    render: RenderConfig,
}

/// Steps the true pose and renders it. Ignores frame context.
#[derive(Debug, Clone, Default)]
pub struct OracleModel {
    state: Option<Hidden>,
}

impl OracleModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pose(&self) -> Option<Pose> {
        self.state.as_ref().map(|s| s.pose)
    }

    fn advance(&mut self, next: Action) -> Result<Frame, ModelError> {
        let s = self.state.as_mut().ok_or(ModelError::NotInitialized)?;
        s.pose = step(&s.map, s.pose, next)?.pose;
        Ok(render(&s.map, &s.pose, &s.render))
    }
}

impl WorldModel for OracleModel {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn context_len(&self) -> usize {
        1
    }

    fn reset(&mut self, init: &EpisodeInit) -> Result<(), ModelError> {
        init.start.validate(&init.map)?;
        self.state = Some(Hidden {
            map: init.map.clone(),
            pose: init.start,
            render: init.render.clone(),
        });
        Ok(())
    }

    fn predict(
        &mut self,
        _frames: &[Frame],
        _actions: &[Action],
        next: Action,
        _rng: &mut Rng,
    ) -> Result<Frame, ModelError> {
        self.advance(next)
    }
}

/// Controlled hidden-state corruption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftParams {
    /// Extra heading ticks added after every action.
    pub yaw_bias_steps: i32,
    /// Per-step palette shift toward [`DriftParams::TARGET_HUE`], in `[0, 1]`.
    pub color_drift_rate: f64,
    /// Remove a decor marker after this many consecutive steps out of view.
    /// `None` never removes.
    pub decor_delete_after: Option<u32>,
}

impl Default for DriftParams {
    fn default() -> Self {
        Self {
            yaw_bias_steps: 0,
            color_drift_rate: 0.0,
            decor_delete_after: None,
        }
    }
}

impl DriftParams {
    pub const TARGET_HUE: [f64; 3] = [0.9, 0.1, 0.9];

    pub fn yaw(steps: i32) -> Self {
        Self {
            yaw_bias_steps: steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.color_drift_rate) {
            return Err(ModelError::InvalidParams(format!(
                "color_drift_rate {} outside [0, 1]",
                self.color_drift_rate
            )));
        }
        if self.decor_delete_after == Some(0) {
            return Err(ModelError::InvalidParams(
                "decor_delete_after must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct DriftState {
    map: MazeMap,
    base_palette: std::collections::BTreeMap<u8, [f64; 3]>,
    pose: Pose,
    unseen: Vec<u32>,
    steps: u64,
    render: RenderConfig,
}

/// The oracle with a biased heading, a drifting palette and forgetful decor.
#[derive(Debug, Clone)]
pub struct DriftModel {
    params: DriftParams,
    state: Option<DriftState>,
}

impl DriftModel {
    pub fn new(params: DriftParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self {
            params,
            state: None,
        })
    }

    pub fn params(&self) -> &DriftParams {
        &self.params
    }

    /// Current hidden pose (after any yaw bias).
    pub fn pose(&self) -> Option<Pose> {
        self.state.as_ref().map(|s| s.pose)
    }

    /// Decor markers still present in the hidden map.
    pub fn decor(&self) -> Option<&[crate::env::Decor]> {
        self.state.as_ref().map(|s| s.map.decor())
    }

    pub fn hidden_map(&self) -> Option<&MazeMap> {
        self.state.as_ref().map(|s| &s.map)
    }
}

impl WorldModel for DriftModel {
    fn name(&self) -> String {
        "drift".into()
    }

    fn context_len(&self) -> usize {
        1
    }

    fn reset(&mut self, init: &EpisodeInit) -> Result<(), ModelError> {
        init.start.validate(&init.map)?;
        let map = (*init.map).clone();
        self.state = Some(DriftState {
            base_palette: map.palette().clone(),
            unseen: vec![0; map.decor().len()],
            map,
            pose: init.start,
            steps: 0,
            render: init.render.clone(),
        });
        Ok(())
    }

    fn predict(
        &mut self,
        _frames: &[Frame],
        _actions: &[Action],
        next: Action,
        _rng: &mut Rng,
    ) -> Result<Frame, ModelError> {
        let p = &self.params;
        let s = self.state.as_mut().ok_or(ModelError::NotInitialized)?;
        s.steps += 1;
        s.pose = step(&s.map, s.pose, next)?.pose.rotated(p.yaw_bias_steps);

        if p.color_drift_rate > 0.0 {
            let t = (p.color_drift_rate * s.steps as f64).min(1.0);
            let target = DriftParams::TARGET_HUE;
            for (id, rgb) in s.map.palette_mut().iter_mut() {
                let base = s.base_palette[id];
                for c in 0..3 {
                    rgb[c] = base[c] + t * (target[c] - base[c]);
                }
            }
        }

        if let Some(limit) = p.decor_delete_after {
            let (_, vis) = render_with_visibility(&s.map, &s.pose, &s.render);
            for (i, count) in s.unseen.iter_mut().enumerate() {
                *count = if vis.decor.contains(&i) { 0 } else { *count + 1 };
            }
            let doomed: Vec<bool> = s.unseen.iter().map(|&c| c >= limit).collect();
            if doomed.iter().any(|&d| d) {
                s.map.remove_decor(|i| !doomed[i]);
                let mut i = 0;
                s.unseen.retain(|_| {
                    let keep = !doomed[i];
                    i += 1;
                    keep
                });
            }
        }

        Ok(render(&s.map, &s.pose, &s.render))
    }
}

/// Returns the most recent context frame unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenModel;

impl WorldModel for FrozenModel {
    fn name(&self) -> String {
        "frozen".into()
    }

    fn context_len(&self) -> usize {
        1
    }

    fn reset(&mut self, _init: &EpisodeInit) -> Result<(), ModelError> {
        Ok(())
    }

    fn predict(
        &mut self,
        frames: &[Frame],
        _actions: &[Action],
        _next: Action,
        _rng: &mut Rng,
    ) -> Result<Frame, ModelError> {
        frames.last().cloned().ok_or(ModelError::EmptyContext)
    }
}

/// Oracle output plus i.i.d. Gaussian pixel noise, clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct NoisyModel {
    sigma: f64,
    oracle: OracleModel,
}

impl NoisyModel {
    pub fn new(sigma: f64) -> Result<Self, ModelError> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(ModelError::InvalidParams(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            oracle: OracleModel::new(),
        })
    }
}

/// Adds `N(0, sigma^2)` noise to every value of `frame`.
pub(crate) fn add_noise(frame: &Frame, sigma: f64, rng: &mut Rng) -> Frame {
    if sigma == 0.0 {
        return frame.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let data = frame.data().iter().map(|&v| v + normal.sample(rng)).collect();
    Frame::from_clamped(frame.height(), frame.width(), data)
}

impl WorldModel for NoisyModel {
    fn name(&self) -> String {
        format!("noisy(sigma={})", self.sigma)
    }

    fn context_len(&self) -> usize {
        1
    }

    fn reset(&mut self, init: &EpisodeInit) -> Result<(), ModelError> {
        self.oracle.reset(init)
    }

    fn predict(
        &mut self,
        frames: &[Frame],
        actions: &[Action],
        next: Action,
        rng: &mut Rng,
    ) -> Result<Frame, ModelError> {
        let clean = self.oracle.predict(frames, actions, next, rng)?;
        Ok(add_noise(&clean, self.sigma, rng))
    }
}
