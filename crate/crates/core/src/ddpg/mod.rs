//! Actor-critic learner with target networks, a replay ring and two
//! exploration modes: additive Gaussian noise or the imitation heuristic.

mod agent;
mod mlp;
mod replay;
mod train;

pub use agent::{Agent, AgentConfig};
pub use mlp::{Mlp, MlpCache, OutputActivation};
pub use replay::ReplayBuffer;
pub use train::{
    episodes_to_threshold, evaluate_policy, train_episode, EpisodeStats, EvalReport, HeuristicDiag, StepDiag,
    Task, TrainState,
};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::armsim::{ActionVector, Point2};
use crate::error::{Error, Result};
use crate::imitation::{GridCell, GRID};

/// Number of observation features fed to the networks.
pub const fn feature_dim(joints: usize) -> usize {
    joints + 5
}

/// Low-dimensional agent state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub joint_angles: Vec<f64>,
    pub ee_position: Point2,
    /// Demonstrated cell for the current step.
    pub target_cell: GridCell,
    /// `t / T`.
    pub time: f64,
}

impl Observation {
    pub fn new(
        joint_angles: Vec<f64>,
        ee_position: Point2,
        target_cell: GridCell,
        time: f64,
    ) -> Result<Self> {
        let finite = joint_angles.iter().all(|a| a.is_finite())
            && ee_position.x.is_finite()
            && ee_position.y.is_finite();
        if !finite {
            return Err(Error::Invariant("observation has non-finite components".into()));
        }
        if !(0.0..=1.0).contains(&time) {
            return Err(Error::Invariant(format!("normalized time {time} outside [0, 1]")));
        }
        Ok(Self {
            joint_angles,
            ee_position,
            target_cell,
            time,
        })
    }

    /// Angles over π, effector position, the target cell's approximate
    /// workspace center and normalized time.
    pub fn features(&self) -> Vec<f64> {
        let g = GRID as f64;
        let mut f: Vec<f64> = self.joint_angles.iter().map(|a| a / PI).collect();
        f.extend([
            self.ee_position.x,
            self.ee_position.y,
            (self.target_cell.col() as f64 + 0.5) / g,
            1.0 - (self.target_cell.row() as f64 + 0.5) / g,
            self.time,
        ]);
        f
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub s: Observation,
    pub a: ActionVector,
    pub r: f64,
    pub s_next: Observation,
    pub done: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExplorationMode {
    GaussianNoise,
    Heuristic,
    None,
}

impl ExplorationMode {
    pub fn name(self) -> &'static str {
        match self {
            ExplorationMode::GaussianNoise => "gaussian_noise",
            ExplorationMode::Heuristic => "heuristic",
            ExplorationMode::None => "none",
        }
    }
}

impl fmt::Display for ExplorationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExplorationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_noise" | "gaussian" | "noise" => Ok(ExplorationMode::GaussianNoise),
            "heuristic" => Ok(ExplorationMode::Heuristic),
            "none" => Ok(ExplorationMode::None),
            _ => Err(Error::Config(format!("unknown exploration mode {s:?}"))),
        }
    }
}
