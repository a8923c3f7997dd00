//! Kinematic planar arm, synthetic camera and scripted demonstrations.

mod demo;
mod kinematics;
mod raster;

pub use demo::{generate_demo, DemoConfig, DemoPattern, DemoTrajectory};
pub use kinematics::{forward_kinematics, jacobian, ArmState, Point2};
pub use raster::{render, render_hand, Camera, Frame, RenderStyle, BACKGROUND, INK};

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Joint velocity command in radians per step.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionVector(pub Vec<f64>);

impl ActionVector {
    pub fn zeros(joints: usize) -> Self {
        Self(vec![0.0; joints])
    }

    /// Componentwise clip to `±limit`.
    pub fn clipped(&self, limit: f64) -> Self {
        Self(self.0.iter().map(|a| a.clamp(-limit, limit)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `−d + 1` when the distance `d` is strictly below `success_radius`, else `−d`.
pub fn reward_fn(ee: Point2, target: Point2, success_radius: f64) -> f64 {
    let d = ee.distance(target);
    if d < success_radius {
        1.0 - d
    } else {
        -d
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmConfig {
    pub link_lengths: Vec<f64>,
    pub base: Point2,
    pub initial_angles: Vec<f64>,
    /// Half-width of the uniform per-episode perturbation of `initial_angles`.
    pub initial_jitter: f64,
    pub action_limit: f64,
    pub success_radius: f64,
    /// End the episode as soon as the effector is within `success_radius` of the goal.
    pub terminate_on_success: bool,
    pub image_size: usize,
    pub style: RenderStyle,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            link_lengths: vec![0.4, 0.3, 0.2],
            base: Point2::new(0.5, 0.5),
            initial_angles: vec![PI / 2.0, -PI / 2.0, -PI / 2.0],
            initial_jitter: 0.0,
            action_limit: 0.1,
            success_radius: 0.05,
            terminate_on_success: true,
            image_size: 64,
            style: RenderStyle::default(),
        }
    }
}

impl ArmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_angles.len() != self.link_lengths.len() {
            return Err(Error::Config(format!(
                "{} initial angles for {} links",
                self.initial_angles.len(),
                self.link_lengths.len()
            )));
        }
        ArmState::new(
            self.initial_angles.clone(),
            self.link_lengths.clone(),
            self.base,
        )?;
        if !(self.action_limit > 0.0) {
            return Err(Error::Config("action limit must be positive".into()));
        }
        if !(self.success_radius > 0.0) {
            return Err(Error::Config("success radius must be positive".into()));
        }
        if !(0.0..=PI).contains(&self.initial_jitter) {
            return Err(Error::Config("initial jitter must lie in [0, pi]".into()));
        }
        Camera::new(self.image_size, self.image_size)?;
        Ok(())
    }

    pub fn joints(&self) -> usize {
        self.link_lengths.len()
    }
}

/// Result of advancing the arm by one action.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub next_state: ArmState,
    pub reward: f64,
    pub frame: Frame,
    pub done: bool,
    /// Effector within the success radius of the demonstration's final point.
    pub success: bool,
}

/// Stateless stepping and rendering for one arm configuration.
#[derive(Clone, Debug)]
pub struct ArmEnv {
    cfg: ArmConfig,
    camera: Camera,
}

impl ArmEnv {
    pub fn new(cfg: ArmConfig) -> Result<Self> {
        cfg.validate()?;
        let camera = Camera::new(cfg.image_size, cfg.image_size)?;
        Ok(Self { cfg, camera })
    }

    pub fn config(&self) -> &ArmConfig {
        &self.cfg
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn render(&self, state: &ArmState) -> Frame {
        render(&self.camera, &self.cfg.style, state)
    }

    pub fn render_hand(&self, point: Point2) -> Result<Frame> {
        render_hand(&self.camera, &self.cfg.style, point)
    }

    /// Starting pose, perturbed by `initial_jitter` when that is non-zero.
    pub fn initial_state(&self, rng: &mut impl Rng) -> ArmState {
        let j = self.cfg.initial_jitter;
        let angles = self
            .cfg
            .initial_angles
            .iter()
            .map(|&a| {
                if j > 0.0 {
                    (a + rng.random_range(-j..=j)).clamp(-PI, PI)
                } else {
                    a
                }
            })
            .collect();
        ArmState {
            joint_angles: angles,
            link_lengths: self.cfg.link_lengths.clone(),
            base: self.cfg.base,
        }
    }

    /// Applies the clipped action at index `t` of `demo` and scores the new pose
    /// against `demo[t]`.
    pub fn step(
        &self,
        state: &ArmState,
        action: &ActionVector,
        demo: &DemoTrajectory,
        t: usize,
    ) -> Result<StepOutcome> {
        if t >= demo.len() {
            return Err(Error::EpisodeBounds { t, len: demo.len() });
        }
        if action.len() != state.joints() {
            return Err(Error::Dimension(format!(
                "action has {} components for {} joints",
                action.len(),
                state.joints()
            )));
        }
        let applied = action.clipped(self.cfg.action_limit);
        let joint_angles = state
            .joint_angles
            .iter()
            .zip(&applied.0)
            .map(|(a, v)| (a + v).clamp(-PI, PI))
            .collect();
        let next_state = ArmState {
            joint_angles,
            link_lengths: state.link_lengths.clone(),
            base: state.base,
        };
        let ee = forward_kinematics(&next_state);
        let reward = reward_fn(ee, demo.points[t], self.cfg.success_radius);
        let success = ee.distance(demo.goal()) < self.cfg.success_radius;
        let done = t + 1 == demo.len() || (self.cfg.terminate_on_success && success);
        let frame = self.render(&next_state);
        Ok(StepOutcome {
            next_state,
            reward,
            frame,
            done,
            success,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_cases() {
        let p = Point2::new(0.3, 0.4);
        assert_eq!(reward_fn(p, p, 0.05), 1.0);
        assert_eq!(reward_fn(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 0.05), -1.0);
        assert_eq!(reward_fn(Point2::new(0.0, 0.0), Point2::new(0.05, 0.0), 0.05), -0.05);
    }

    #[test]
    fn clipping_contract() {
        let a = ActionVector(vec![0.5, -0.5, 0.05]).clipped(0.1);
        assert_eq!(a.0, vec![0.1, -0.1, 0.05]);
    }
}
