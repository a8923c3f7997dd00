//! In-memory building blocks shared by the commands.

use hddpg_core::armsim::{generate_demo, ArmEnv, DemoTrajectory, Frame};
use hddpg_core::ddpg::{
    episodes_to_threshold, train_episode, Agent, EpisodeStats, ExplorationMode, Task, TrainState,
};
use hddpg_core::heuristic::Trajectory;
use hddpg_core::imitation::{build_demo_map, ImitationNet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// A rendered demonstration and the grid map the imitation net reads off it.
pub struct RecordedDemo {
    pub demo: DemoTrajectory,
    pub frames: Vec<Frame>,
    pub map: Trajectory,
}

pub fn record_demo(cfg: &RunConfig, net: &ImitationNet) -> CliResult<RecordedDemo> {
    let env = ArmEnv::new(cfg.arm.clone())?;
    let demo = generate_demo(cfg.pattern, cfg.episode_len, cfg.seed, &cfg.demo)?;
    let frames = demo
        .points
        .iter()
        .map(|&p| env.render_hand(p))
        .collect::<hddpg_core::Result<Vec<_>>>()?;
    let map = build_demo_map(net, &frames)?;
    Ok(RecordedDemo { demo, frames, map })
}

/// Assembles the task, insisting the demonstration spans exactly one episode.
pub fn make_task(
    cfg: &RunConfig,
    demo: DemoTrajectory,
    map: Trajectory,
    net: Option<ImitationNet>,
) -> CliResult<Task> {
    if demo.len() != cfg.episode_len || map.len() != cfg.episode_len {
        return Err(CliError::Config(format!(
            "episode_len is {} but the demo has {} points and the grid map {} cells",
            cfg.episode_len,
            demo.len(),
            map.len()
        )));
    }
    Ok(Task::new(ArmEnv::new(cfg.arm.clone())?, demo, map, net)?)
}

/// Trains a fresh agent for `cfg.episodes` episodes, reporting each one.
/// The seed fixes both the initialization and every episode.
pub fn train_run(
    cfg: &RunConfig,
    task: &Task,
    mode: ExplorationMode,
    seed: u64,
    mut on_episode: impl FnMut(&EpisodeStats, &TrainState) -> CliResult<()>,
) -> CliResult<TrainState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agent = Agent::new(cfg.agent.clone(), cfg.arm.joints(), &mut rng)?;
    let mut ts = TrainState::new(agent, mode, cfg.heuristic)?;
    for episode in 0..cfg.episodes {
        let stats = train_episode(&mut ts, task, episode, &mut rng)?;
        on_episode(&stats, &ts)?;
    }
    Ok(ts)
}

/// Learning-speed summary of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub mode: ExplorationMode,
    pub seed: u64,
    pub episodes_to_threshold: Option<usize>,
    /// Mean episode return, i.e. the area under the reward curve per episode.
    pub reward_auc: f64,
}

impl RunSummary {
    pub fn from_stats(cfg: &RunConfig, mode: ExplorationMode, seed: u64, stats: &[EpisodeStats]) -> Self {
        let successes: Vec<bool> = stats.iter().map(|s| s.success).collect();
        Self {
            mode,
            seed,
            episodes_to_threshold: episodes_to_threshold(&successes, cfg.threshold_window, cfg.threshold_rate),
            reward_auc: stats.iter().map(|s| s.total_reward).sum::<f64>() / stats.len().max(1) as f64,
        }
    }

    /// Episodes to threshold with runs that never got there censored at `episodes + 1`.
    pub fn censored(&self, episodes: usize) -> usize {
        self.episodes_to_threshold.unwrap_or(episodes + 1)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

pub const EPISODE_CSV_HEADER: &str =
    "episode,total_reward,final_distance,mean_heuristic_scalar,critic_loss_mean,success,steps";

pub fn episode_csv_row(s: &EpisodeStats) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.episode + 1,
        s.total_reward,
        s.final_distance,
        s.mean_heuristic_scalar,
        s.critic_loss_mean,
        u8::from(s.success),
        s.steps.len()
    )
}

pub fn step_csv_header(joints: usize) -> String {
    let h: Vec<String> = (0..joints).map(|j| format!("h{j}")).collect();
    format!(
        "episode,t,reward,distance,robot_row,robot_col,target_row,target_col,heuristic_scalar,{}",
        h.join(",")
    )
}

/// Per-step rows; heuristic columns stay empty outside heuristic mode.
pub fn step_csv_rows(s: &EpisodeStats, joints: usize) -> Vec<String> {
    s.steps
        .iter()
        .map(|d| {
            let tail = match &d.heuristic {
                Some(h) => {
                    let applied: Vec<String> = h.applied.0.iter().map(f64::to_string).collect();
                    format!(
                        "{},{},{},{},{},{}",
                        h.robot_cell.row(),
                        h.robot_cell.col(),
                        h.target_cell.row(),
                        h.target_cell.col(),
                        h.scalar,
                        applied.join(",")
                    )
                }
                None => ",".repeat(4 + joints),
            };
            format!("{},{},{},{},{tail}", s.episode + 1, d.t, d.reward, d.distance)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even_empty() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn censoring_uses_one_past_the_budget() {
        let cfg = RunConfig {
            threshold_window: 2,
            threshold_rate: 1.0,
            ..RunConfig::default()
        };
        let stat = |success| EpisodeStats {
            episode: 0,
            total_reward: -1.0,
            final_distance: 0.0,
            mean_heuristic_scalar: 0.0,
            critic_loss_mean: f64::NAN,
            success,
            steps: vec![],
        };
        let never = RunSummary::from_stats(&cfg, ExplorationMode::None, 0, &[stat(false), stat(true)]);
        assert_eq!(never.censored(2), 3);
        assert_eq!(never.reward_auc, -1.0);
        let hit = RunSummary::from_stats(&cfg, ExplorationMode::None, 0, &[stat(false), stat(true), stat(true)]);
        assert_eq!(hit.episodes_to_threshold, Some(3));
    }

    #[test]
    fn step_rows_have_header_width() {
        let joints = 3;
        let header_cols = step_csv_header(joints).split(',').count();
        let stats = EpisodeStats {
            episode: 0,
            total_reward: 0.0,
            final_distance: 0.0,
            mean_heuristic_scalar: 0.0,
            critic_loss_mean: 0.0,
            success: false,
            steps: vec![hddpg_core::ddpg::StepDiag {
                t: 0,
                reward: -0.5,
                distance: 0.5,
                heuristic: None,
            }],
        };
        for row in step_csv_rows(&stats, joints) {
            assert_eq!(row.split(',').count(), header_cols);
        }
    }
}
