//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! rejected. Lists are comma separated; points are written `x,y`.

use std::collections::HashSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hddpg_core::armsim::{ArmConfig, DemoConfig, DemoPattern, Point2};
use hddpg_core::ddpg::{AgentConfig, ExplorationMode};
use hddpg_core::heuristic::HeuristicConfig;
use hddpg_core::imitation::{ImitationArch, Subject, TrainConfig};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub arm: ArmConfig,
    /// Episode length T; also the demonstration length.
    pub episode_len: usize,
    pub pattern: DemoPattern,
    pub demo: DemoConfig,
    pub n_per_cell: usize,
    pub subjects: Vec<Subject>,
    /// Store augmented frames instead of clean ones.
    pub store_augmented: bool,
    pub val_fraction: f64,
    pub imitation: TrainConfig,
    /// Minimum final validation accuracy accepted by `train-imitation`.
    pub val_floor: f64,
    pub agent: AgentConfig,
    pub heuristic: HeuristicConfig,
    pub mode: ExplorationMode,
    pub episodes: usize,
    /// Write a checkpoint every this many episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
    pub eval_episodes: usize,
    pub compare_seeds: usize,
    pub threshold_window: usize,
    pub threshold_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let arm = ArmConfig::default();
        let a_max = arm.action_limit;
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            arm,
            episode_len: 50,
            pattern: DemoPattern::ReachPoint,
            demo: DemoConfig::default(),
            n_per_cell: 40,
            subjects: vec![Subject::Hand, Subject::Robot],
            store_augmented: false,
            val_fraction: 0.2,
            imitation: TrainConfig::default(),
            val_floor: 0.85,
            agent: AgentConfig::for_action_limit(a_max),
            heuristic: HeuristicConfig::for_action_limit(a_max),
            mode: ExplorationMode::Heuristic,
            episodes: 300,
            checkpoint_every: 50,
            eval_episodes: 10,
            compare_seeds: 5,
            threshold_window: 20,
            threshold_rate: 0.8,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> CliResult<T>
where
    T::Err: Display,
{
    v.parse()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse {v:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> CliResult<Vec<T>>
where
    T::Err: Display,
{
    v.split(',').map(|s| parse(key, s.trim())).collect()
}

fn parse_point(key: &str, v: &str) -> CliResult<Point2> {
    match parse_list::<f64>(key, v)?[..] {
        [x, y] => Ok(Point2::new(x, y)),
        _ => Err(CliError::Config(format!("{key}: expected x,y, got {v:?}"))),
    }
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Defaults overridden by every `key = value` line of `text`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!("line {}: duplicate key {key:?}", n + 1)));
            }
            entries.push((n + 1, key, value));
        }
        let mut cfg = Self::default();
        // Agent and heuristic defaults scale with the action limit, so it goes first.
        if let Some(&(_, _, v)) = entries.iter().find(|e| e.1 == "action_limit") {
            let a_max: f64 = parse("action_limit", v)?;
            cfg.arm.action_limit = a_max;
            cfg.agent = AgentConfig::for_action_limit(a_max);
            cfg.heuristic = HeuristicConfig::for_action_limit(a_max);
        }
        for (n, key, value) in entries {
            cfg.set(key, value).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {n}: {m}")),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> CliResult<()> {
        match key {
            "seed" => self.seed = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "links" => self.arm.link_lengths = parse_list(key, v)?,
            "initial_angles" => self.arm.initial_angles = parse_list(key, v)?,
            "base" => self.arm.base = parse_point(key, v)?,
            "initial_jitter" => self.arm.initial_jitter = parse(key, v)?,
            "action_limit" => {}
            "success_radius" => self.arm.success_radius = parse(key, v)?,
            "terminate_on_success" => self.arm.terminate_on_success = parse(key, v)?,
            "image_size" => self.arm.image_size = parse(key, v)?,
            "episode_len" => self.episode_len = parse(key, v)?,
            "pattern" => self.pattern = parse(key, v)?,
            "demo_max_step" => self.demo.max_step = parse(key, v)?,
            "demo_jitter" => self.demo.jitter = parse(key, v)?,
            "reach_start" => self.demo.reach_start = parse_point(key, v)?,
            "reach_target" => self.demo.reach_target = parse_point(key, v)?,
            "reach_fraction" => self.demo.reach_fraction = parse(key, v)?,
            "n_per_cell" => self.n_per_cell = parse(key, v)?,
            "subjects" => self.subjects = parse_list(key, v)?,
            "store_augmented" => self.store_augmented = parse(key, v)?,
            "val_fraction" => self.val_fraction = parse(key, v)?,
            "imitation_epochs" => self.imitation.epochs = parse(key, v)?,
            "imitation_batch_size" => self.imitation.batch_size = parse(key, v)?,
            "imitation_lr" => self.imitation.learning_rate = parse(key, v)?,
            "imitation_final_lr" => self.imitation.final_learning_rate = parse(key, v)?,
            "train_augment" => self.imitation.augment = parse(key, v)?,
            "val_floor" => self.val_floor = parse(key, v)?,
            "gamma" => self.agent.gamma = parse(key, v)?,
            "tau" => self.agent.tau = parse(key, v)?,
            "buffer_capacity" => self.agent.buffer_capacity = parse(key, v)?,
            "agent_batch_size" => self.agent.batch_size = parse(key, v)?,
            "warmup" => self.agent.warmup = parse(key, v)?,
            "actor_hidden" => self.agent.actor_hidden = parse_list(key, v)?,
            "critic_hidden" => self.agent.critic_hidden = parse_list(key, v)?,
            "actor_lr" => self.agent.actor_lr = parse(key, v)?,
            "critic_lr" => self.agent.critic_lr = parse(key, v)?,
            "noise_sigma" => self.agent.noise_sigma = parse(key, v)?,
            "actor_final_init" => {
                self.agent.actor_final_init = match v {
                    "none" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "updates_per_step" => self.agent.updates_per_step = parse(key, v)?,
            "heuristic_gain" => self.heuristic.gain = parse(key, v)?,
            "heuristic_decay" => self.heuristic.decay = parse(key, v)?,
            "heuristic_clip" => self.heuristic.clip = parse(key, v)?,
            "mode" => self.mode = parse(key, v)?,
            "episodes" => self.episodes = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "eval_episodes" => self.eval_episodes = parse(key, v)?,
            "compare_seeds" => self.compare_seeds = parse(key, v)?,
            "threshold_window" => self.threshold_window = parse(key, v)?,
            "threshold_rate" => self.threshold_rate = parse(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its effective value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = |p: Point2| format!("{},{}", p.x, p.y);
        vec![
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("links", join(&self.arm.link_lengths)),
            ("initial_angles", join(&self.arm.initial_angles)),
            ("base", p(self.arm.base)),
            ("initial_jitter", self.arm.initial_jitter.to_string()),
            ("action_limit", self.arm.action_limit.to_string()),
            ("success_radius", self.arm.success_radius.to_string()),
            ("terminate_on_success", self.arm.terminate_on_success.to_string()),
            ("image_size", self.arm.image_size.to_string()),
            ("episode_len", self.episode_len.to_string()),
            ("pattern", self.pattern.name().to_string()),
            ("demo_max_step", self.demo.max_step.to_string()),
            ("demo_jitter", self.demo.jitter.to_string()),
            ("reach_start", p(self.demo.reach_start)),
            ("reach_target", p(self.demo.reach_target)),
            ("reach_fraction", self.demo.reach_fraction.to_string()),
            ("n_per_cell", self.n_per_cell.to_string()),
            ("subjects", join(&self.subjects)),
            ("store_augmented", self.store_augmented.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("imitation_epochs", self.imitation.epochs.to_string()),
            ("imitation_batch_size", self.imitation.batch_size.to_string()),
            ("imitation_lr", self.imitation.learning_rate.to_string()),
            ("imitation_final_lr", self.imitation.final_learning_rate.to_string()),
            ("train_augment", self.imitation.augment.to_string()),
            ("val_floor", self.val_floor.to_string()),
            ("gamma", self.agent.gamma.to_string()),
            ("tau", self.agent.tau.to_string()),
            ("buffer_capacity", self.agent.buffer_capacity.to_string()),
            ("agent_batch_size", self.agent.batch_size.to_string()),
            ("warmup", self.agent.warmup.to_string()),
            ("actor_hidden", join(&self.agent.actor_hidden)),
            ("critic_hidden", join(&self.agent.critic_hidden)),
            ("actor_lr", self.agent.actor_lr.to_string()),
            ("critic_lr", self.agent.critic_lr.to_string()),
            ("noise_sigma", self.agent.noise_sigma.to_string()),
            (
                "actor_final_init",
                self.agent
                    .actor_final_init
                    .map_or("none".to_string(), |b| b.to_string()),
            ),
            ("updates_per_step", self.agent.updates_per_step.to_string()),
            ("heuristic_gain", self.heuristic.gain.to_string()),
            ("heuristic_decay", self.heuristic.decay.to_string()),
            ("heuristic_clip", self.heuristic.clip.to_string()),
            ("mode", self.mode.name().to_string()),
            ("episodes", self.episodes.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("compare_seeds", self.compare_seeds.to_string()),
            ("threshold_window", self.threshold_window.to_string()),
            ("threshold_rate", self.threshold_rate.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn imitation_arch(&self) -> ImitationArch {
        ImitationArch::for_image(self.arm.image_size)
    }

    /// Checks every numeric range and cross-field constraint.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.arm.validate()?;
        self.demo.validate()?;
        self.agent.validate()?;
        self.heuristic.validate(self.arm.action_limit)?;
        if (self.agent.action_limit - self.arm.action_limit).abs() > 0.0 {
            return bad("agent and arm action limits differ".into());
        }
        self.imitation_arch().flat_features()?;
        if self.episode_len < 2 {
            return bad(format!("episode_len {} must be at least 2", self.episode_len));
        }
        if self.n_per_cell == 0 || self.subjects.is_empty() {
            return bad("dataset needs n_per_cell > 0 and at least one subject".into());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!("val_fraction {} not in [0, 1)", self.val_fraction));
        }
        let im = &self.imitation;
        if im.epochs == 0 || im.batch_size == 0 {
            return bad("imitation epochs and batch size must be positive".into());
        }
        if !(im.final_learning_rate > 0.0 && im.final_learning_rate <= im.learning_rate) {
            return bad("imitation learning rates must satisfy 0 < final <= initial".into());
        }
        if !(0.0..=1.0).contains(&self.val_floor) {
            return bad(format!("val_floor {} not in [0, 1]", self.val_floor));
        }
        if self.episodes == 0 || self.eval_episodes == 0 {
            return bad("episodes and eval_episodes must be positive".into());
        }
        if self.threshold_window == 0 || !(0.0..=1.0).contains(&self.threshold_rate) {
            return bad("threshold window must be positive and rate in [0, 1]".into());
        }
        Ok(())
    }
}
