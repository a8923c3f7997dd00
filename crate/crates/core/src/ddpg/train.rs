use rand::Rng;

use super::agent::Agent;
use super::replay::ReplayBuffer;
use super::{ExplorationMode, Observation, Transition};
use crate::armsim::{forward_kinematics, ActionVector, ArmEnv, ArmState, DemoTrajectory, Frame};
use crate::error::{Error, Result};
use crate::heuristic::{grid_distance, heuristic_action, HeuristicConfig, Trajectory};
use crate::imitation::{estimate, GridCell, ImitationNet};

/// Everything an episode runs against: the environment, the demonstration
/// it is scored on, the demonstration's grid map and, for heuristic
/// exploration, the imitation network that locates the robot.
#[derive(Clone, Debug)]
pub struct Task {
    pub env: ArmEnv,
    pub demo: DemoTrajectory,
    pub demo_map: Trajectory,
    pub net: Option<ImitationNet>,
}

impl Task {
    pub fn new(
        env: ArmEnv,
        demo: DemoTrajectory,
        demo_map: Trajectory,
        net: Option<ImitationNet>,
    ) -> Result<Self> {
        if demo_map.len() != demo.len() {
            return Err(Error::Config(format!(
                "grid map has {} steps but the episode has {}",
                demo_map.len(),
                demo.len()
            )));
        }
        Ok(Self {
            env,
            demo,
            demo_map,
            net,
        })
    }

    pub fn horizon(&self) -> usize {
        self.demo.len()
    }

    fn observe(&self, state: &ArmState, t: usize) -> Result<Observation> {
        let last = self.horizon() - 1;
        let cell = self.demo_map.get(t.min(last)).expect("length checked");
        Observation::new(
            state.joint_angles.clone(),
            forward_kinematics(state),
            cell,
            t as f64 / self.horizon() as f64,
        )
    }
}

/// Learner state carried across episodes.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    pub mode: ExplorationMode,
    pub heuristic: HeuristicConfig,
}

impl TrainState {
    pub fn new(agent: Agent, mode: ExplorationMode, heuristic: HeuristicConfig) -> Result<Self> {
        heuristic.validate(agent.config().action_limit)?;
        let buffer = ReplayBuffer::new(agent.config().buffer_capacity)?;
        Ok(Self {
            agent,
            buffer,
            mode,
            heuristic,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDiag {
    pub t: usize,
    pub reward: f64,
    /// Distance from the effector to the demonstrated point after the step.
    pub distance: f64,
    /// Robot and demonstrated cells with their grid distance, in heuristic mode.
    pub heuristic: Option<HeuristicDiag>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicDiag {
    pub robot_cell: GridCell,
    pub target_cell: GridCell,
    /// `grid_distance(robot_cell, target_cell)`.
    pub scalar: f64,
    pub applied: ActionVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub total_reward: f64,
    /// Distance from the final effector position to the demonstration's goal.
    pub final_distance: f64,
    /// Mean grid distance between the robot's and the demonstrated cell;
    /// zero outside heuristic mode.
    pub mean_heuristic_scalar: f64,
    /// Mean pre-step critic loss, `NaN` when no update ran.
    pub critic_loss_mean: f64,
    pub success: bool,
    pub steps: Vec<StepDiag>,
}

/// Runs one episode: act, step, store, and learn once the buffer is past
/// warmup.
pub fn train_episode(
    ts: &mut TrainState,
    task: &Task,
    episode: usize,
    rng: &mut impl Rng,
) -> Result<EpisodeStats> {
    let net = match (ts.mode, &task.net) {
        (ExplorationMode::Heuristic, None) => {
            return Err(Error::Config(
                "heuristic exploration needs a trained imitation network".into(),
            ))
        }
        (ExplorationMode::Heuristic, Some(net)) => Some(net),
        _ => None,
    };
    let env = &task.env;
    let hcfg = ts.heuristic.at_episode(episode);
    let cfg = ts.agent.config().clone();
    let learn_after = cfg.warmup.max(cfg.batch_size);

    let mut state = env.initial_state(rng);
    let mut frame: Frame = env.render(&state);
    let mut s = task.observe(&state, 0)?;
    let mut steps = Vec::with_capacity(task.horizon());
    let (mut total_reward, mut loss_sum, mut updates) = (0.0, 0.0, 0usize);
    let mut success = false;

    for t in 0..task.horizon() {
        let diag = match net {
            Some(net) => {
                let robot_cell = estimate(net, &frame)?;
                let target_cell = task.demo_map.get(t).expect("length checked");
                Some(HeuristicDiag {
                    robot_cell,
                    target_cell,
                    scalar: grid_distance(robot_cell, target_cell),
                    applied: heuristic_action(robot_cell, target_cell, &state, &hcfg, env.camera()),
                })
            }
            None => None,
        };
        let h = diag.as_ref().map(|d| &d.applied);
        let a = ts.agent.select_action(&s, ts.mode, h, rng)?;
        let out = env.step(&state, &a, &task.demo, t)?;
        let s_next = task.observe(&out.next_state, t + 1)?;
        ts.buffer.push(Transition {
            s,
            a,
            r: out.reward,
            s_next: s_next.clone(),
            done: out.done,
        });
        if ts.buffer.len() >= learn_after {
            for _ in 0..cfg.updates_per_step {
                let batch = ts.buffer.sample(cfg.batch_size, rng)?;
                loss_sum += ts.agent.update_critic(&batch)?;
                ts.agent.update_actor(&batch)?;
                ts.agent.soft_update_targets()?;
                updates += 1;
            }
        }
        total_reward += out.reward;
        steps.push(StepDiag {
            t,
            reward: out.reward,
            distance: forward_kinematics(&out.next_state).distance(task.demo.points[t]),
            heuristic: diag,
        });
        success = out.success;
        state = out.next_state;
        frame = out.frame;
        s = s_next;
        if out.done {
            break;
        }
    }

    Ok(EpisodeStats {
        episode,
        total_reward,
        final_distance: forward_kinematics(&state).distance(task.demo.goal()),
        mean_heuristic_scalar: steps
            .iter()
            .map(|d| d.heuristic.as_ref().map_or(0.0, |h| h.scalar))
            .sum::<f64>()
            / steps.len() as f64,
        critic_loss_mean: if updates == 0 {
            f64::NAN
        } else {
            loss_sum / updates as f64
        },
        success,
        steps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_final_distance: f64,
    /// Mean over episodes of `Σ_t ‖ee_t − demo_t‖ / T`.
    pub mean_deviation: f64,
}

/// Greedy rollouts. An episode that ends early on success holds its final
/// pose for the remaining steps of the deviation sum.
pub fn evaluate_policy(
    agent: &Agent,
    task: &Task,
    episodes: usize,
    rng: &mut impl Rng,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let horizon = task.horizon();
    let (mut successes, mut final_dist, mut deviation) = (0usize, 0.0, 0.0);
    for _ in 0..episodes {
        let mut state = task.env.initial_state(rng);
        let mut dev = 0.0;
        let mut success = false;
        let mut t = 0;
        while t < horizon {
            let s = task.observe(&state, t)?;
            let a = agent.select_action(&s, ExplorationMode::None, None, rng)?;
            let out = task.env.step(&state, &a, &task.demo, t)?;
            state = out.next_state;
            success = out.success;
            dev += forward_kinematics(&state).distance(task.demo.points[t]);
            t += 1;
            if out.done {
                break;
            }
        }
        let ee = forward_kinematics(&state);
        dev += task.demo.points[t..].iter().map(|p| ee.distance(*p)).sum::<f64>();
        successes += success as usize;
        final_dist += ee.distance(task.demo.goal());
        deviation += dev / horizon as f64;
    }
    let n = episodes as f64;
    Ok(EvalReport {
        episodes,
        success_rate: successes as f64 / n,
        mean_final_distance: final_dist / n,
        mean_deviation: deviation / n,
    })
}

/// First episode count `e ≥ window` at which the success rate over the
/// trailing `window` episodes reaches `threshold`.
pub fn episodes_to_threshold(successes: &[bool], window: usize, threshold: f64) -> Option<usize> {
    if window == 0 || successes.len() < window {
        return None;
    }
    let mut hits = successes[..window].iter().filter(|&&s| s).count();
    let reached = |hits: usize| hits as f64 / window as f64 >= threshold;
    if reached(hits) {
        return Some(window);
    }
    for e in window..successes.len() {
        hits += successes[e] as usize;
        hits -= successes[e - window] as usize;
        if reached(hits) {
            return Some(e + 1);
        }
    }
    None
}
