use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::mlp::{Mlp, MlpCache, OutputActivation};
use super::{feature_dim, ExplorationMode, Observation, Transition};
use crate::armsim::ActionVector;
use crate::diffcore::{
    mse_loss, optimizer_step, read_container, soft_update, write_container, OptimizerState,
    ParamSet, Tensor,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Standard deviation of the Gaussian exploration noise, in radians per step.
    pub noise_sigma: f64,
    /// Per-component action limit `a_max`.
    pub action_limit: f64,
    /// Half-width of the uniform init of the actor's output layer, if narrowed.
    pub actor_final_init: Option<f64>,
    /// Gradient updates per environment step once past warmup.
    pub updates_per_step: usize,
}

impl AgentConfig {
    pub fn for_action_limit(action_limit: f64) -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            buffer_capacity: 50_000,
            batch_size: 64,
            warmup: 500,
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            noise_sigma: 0.05 * action_limit,
            action_limit,
            actor_final_init: None,
            updates_per_step: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("discount {} not in [0, 1)", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("soft-update rate {} not in (0, 1]", self.tau));
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 {
            return bad("buffer capacity and batch size must be positive".into());
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch size exceeds buffer capacity".into());
        }
        if !(self.action_limit > 0.0) {
            return bad("action limit must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be non-negative", self.noise_sigma));
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if matches!(self.actor_final_init, Some(b) if !(b > 0.0)) {
            return bad("actor output init must be positive".into());
        }
        Ok(())
    }
}

/// Online and target actor-critic networks with their optimizers.
///
/// The actor emits `a_max · tanh(·)`. The critic sees the observation
/// features followed by the action divided by `a_max`.
#[derive(Clone, Debug)]
pub struct Agent {
    cfg: AgentConfig,
    joints: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: OptimizerState,
    pub critic_opt: OptimizerState,
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut v = vec![input];
    v.extend_from_slice(hidden);
    v.push(output);
    v
}

impl Agent {
    pub fn new(cfg: AgentConfig, joints: usize, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        if joints == 0 {
            return Err(Error::Config("agent needs at least one joint".into()));
        }
        let f = feature_dim(joints);
        let actor = Mlp::new(
            &widths(f, &cfg.actor_hidden, joints),
            OutputActivation::Tanh,
            cfg.actor_final_init,
            rng,
        )?;
        let critic = Mlp::new(
            &widths(f + joints, &cfg.critic_hidden, 1),
            OutputActivation::Identity,
            None,
            rng,
        )?;
        let actor_opt = OptimizerState::adam(cfg.actor_lr, &actor.params)?;
        let critic_opt = OptimizerState::adam(cfg.critic_lr, &critic.params)?;
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
            cfg,
            joints,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    /// Adjusts the discount without touching the networks.
    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        let cfg = AgentConfig { gamma, ..self.cfg.clone() };
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    fn check_obs(&self, s: &Observation) -> Result<()> {
        if s.joint_angles.len() != self.joints {
            return Err(Error::Dimension(format!(
                "observation has {} angles, agent expects {}",
                s.joint_angles.len(),
                self.joints
            )));
        }
        Ok(())
    }

    fn obs_batch<'a>(&self, obs: impl ExactSizeIterator<Item = &'a Observation>) -> Result<Tensor> {
        let n = obs.len();
        let mut data = Vec::with_capacity(n * feature_dim(self.joints));
        for s in obs {
            self.check_obs(s)?;
            data.extend(s.features());
        }
        Tensor::new(vec![n, feature_dim(self.joints)], data)
    }

    /// Rows of `[features(s), a / a_max]`.
    fn critic_input(&self, states: &Tensor, scaled_actions: &Tensor) -> Result<Tensor> {
        let (n, f, j) = (states.shape()[0], states.shape()[1], self.joints);
        if scaled_actions.shape() != [n, j] {
            return Err(Error::Dimension(format!(
                "action batch {:?} does not match {n} states of {j} joints",
                scaled_actions.shape()
            )));
        }
        let mut data = Vec::with_capacity(n * (f + j));
        for i in 0..n {
            data.extend_from_slice(states.row(i));
            data.extend_from_slice(scaled_actions.row(i));
        }
        Tensor::new(vec![n, f + j], data)
    }

    fn action_batch<'a>(&self, actions: impl ExactSizeIterator<Item = &'a ActionVector>) -> Result<Tensor> {
        let n = actions.len();
        let mut data = Vec::with_capacity(n * self.joints);
        for a in actions {
            if a.len() != self.joints {
                return Err(Error::Dimension(format!(
                    "action has {} components, agent expects {}",
                    a.len(),
                    self.joints
                )));
            }
            data.extend(a.0.iter().map(|v| v / self.cfg.action_limit));
        }
        Tensor::new(vec![n, self.joints], data)
    }

    /// Deterministic policy `μ(s)`, within `±a_max`.
    pub fn actor_forward(&self, s: &Observation) -> Result<ActionVector> {
        let x = self.obs_batch(std::iter::once(s))?;
        let out = self.actor.forward(&x)?;
        Ok(ActionVector(
            out.output()
                .data()
                .iter()
                .map(|v| v * self.cfg.action_limit)
                .collect(),
        ))
    }

    /// `Q(s, a)` under the online critic.
    pub fn critic_forward(&self, s: &Observation, a: &ActionVector) -> Result<f64> {
        let x = self.critic_input(
            &self.obs_batch(std::iter::once(s))?,
            &self.action_batch(std::iter::once(a))?,
        )?;
        Ok(self.critic.forward(&x)?.output().data()[0])
    }

    /// `∂Q(s, a)/∂a` under the online critic.
    pub fn critic_action_gradient(&self, s: &Observation, a: &ActionVector) -> Result<Vec<f64>> {
        let states = self.obs_batch(std::iter::once(s))?;
        let x = self.critic_input(&states, &self.action_batch(std::iter::once(a))?)?;
        let cache = self.critic.forward(&x)?;
        let g = self.critic.input_gradient(&cache, &Tensor::filled(&[1, 1], 1.0))?;
        let f = states.shape()[1];
        Ok(g.row(0)[f..]
            .iter()
            .map(|v| v / self.cfg.action_limit)
            .collect())
    }

    /// Behaviour action. `heuristic` must be supplied in heuristic mode.
    pub fn select_action(
        &self,
        s: &Observation,
        mode: ExplorationMode,
        heuristic: Option<&ActionVector>,
        rng: &mut impl Rng,
    ) -> Result<ActionVector> {
        let mu = self.actor_forward(s)?;
        let a_max = self.cfg.action_limit;
        let a = match mode {
            ExplorationMode::None => return Ok(mu),
            ExplorationMode::Heuristic => {
                let h = heuristic.ok_or_else(|| {
                    Error::Config("heuristic exploration needs a heuristic term".into())
                })?;
                if h.len() != mu.len() {
                    return Err(Error::Dimension(format!(
                        "heuristic has {} components for {} joints",
                        h.len(),
                        mu.len()
                    )));
                }
                ActionVector(mu.0.iter().zip(&h.0).map(|(m, h)| m + h).collect())
            }
            ExplorationMode::GaussianNoise => {
                let sigma = self.cfg.noise_sigma;
                if sigma == 0.0 {
                    mu
                } else {
                    let normal = Normal::new(0.0, sigma)
                        .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
                    ActionVector(mu.0.iter().map(|m| m + normal.sample(rng)).collect())
                }
            }
        };
        Ok(a.clipped(a_max))
    }

    /// `y_i = r_i + γ (1 − done_i) Q′(s'_i, μ′(s'_i))` from the target networks.
    pub fn compute_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::InsufficientData {
                requested: 1,
                available: 0,
            });
        }
        let next = self.obs_batch(batch.iter().map(|t| &t.s_next))?;
        let mu = self.actor_target.forward(&next)?;
        let q = self
            .critic_target
            .forward(&self.critic_input(&next, mu.output())?)?;
        Ok(batch
            .iter()
            .zip(q.output().data())
            .map(|(t, q)| {
                if t.done {
                    t.r
                } else {
                    t.r + self.cfg.gamma * q
                }
            })
            .collect())
    }

    /// One optimizer step on the mean squared Bellman error; returns the
    /// loss before the step.
    pub fn update_critic(&mut self, batch: &[&Transition]) -> Result<f64> {
        let y = self.compute_targets(batch)?;
        let n = batch.len();
        let x = self.critic_input(
            &self.obs_batch(batch.iter().map(|t| &t.s))?,
            &self.action_batch(batch.iter().map(|t| &t.a))?,
        )?;
        let cache = self.critic.forward(&x)?;
        let (loss, grad) = mse_loss(cache.output(), &Tensor::new(vec![n, 1], y)?)?;
        self.critic.params.zero_grads();
        self.critic.backward(&cache, &grad)?;
        optimizer_step(&mut self.critic.params, &mut self.critic_opt)?;
        Ok(loss)
    }

    /// Forward caches of `Q(s_i, μ(s_i))` for a batch of states.
    fn policy_value(&self, states: &Tensor) -> Result<(MlpCache, MlpCache)> {
        let actor = self.actor.forward(states)?;
        let critic = self.critic.forward(&self.critic_input(states, actor.output())?)?;
        Ok((actor, critic))
    }

    /// Stores the gradient of the actor loss `−(1/N) Σ Q(s_i, μ(s_i))` in the
    /// actor's gradient slots, leaving the critic untouched. Returns the
    /// objective `(1/N) Σ Q`.
    pub fn actor_loss_gradient(&mut self, states: &[&Observation]) -> Result<f64> {
        let x = self.obs_batch(states.iter().copied())?;
        let (actor, critic) = self.policy_value(&x)?;
        let n = states.len();
        let objective = critic.output().sum() / n as f64;
        let dq = self
            .critic
            .input_gradient(&critic, &Tensor::filled(&[n, 1], -1.0 / n as f64))?;
        let f = x.shape()[1];
        // the critic sees μ(s)/a_max, which is exactly the actor's tanh output
        let mut da = Vec::with_capacity(n * self.joints);
        for i in 0..n {
            da.extend_from_slice(&dq.row(i)[f..]);
        }
        self.actor.params.zero_grads();
        self.actor
            .backward(&actor, &Tensor::new(vec![n, self.joints], da)?)?;
        Ok(objective)
    }

    /// One ascent step on `(1/N) Σ Q(s_i, μ(s_i))` over the actor only;
    /// returns the objective before the step.
    pub fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InsufficientData {
                requested: 1,
                available: 0,
            });
        }
        let states: Vec<&Observation> = batch.iter().map(|t| &t.s).collect();
        let objective = self.actor_loss_gradient(&states)?;
        optimizer_step(&mut self.actor.params, &mut self.actor_opt)?;
        Ok(objective)
    }

    /// `θ′ ← τ θ + (1 − τ) θ′` for both networks.
    pub fn soft_update_targets(&mut self) -> Result<()> {
        soft_update(&mut self.actor_target.params, &self.actor.params, self.cfg.tau)?;
        soft_update(&mut self.critic_target.params, &self.critic.params, self.cfg.tau)
    }

    fn nets(&self) -> [(&'static str, &ParamSet); 4] {
        [
            ("actor", &self.actor.params),
            ("critic", &self.critic.params),
            ("actor_target", &self.actor_target.params),
            ("critic_target", &self.critic_target.params),
        ]
    }

    /// All four parameter sets and both optimizer states in one container.
    /// Names are prefixed `actor/`, `critic/`, `actor_target/`,
    /// `critic_target/`, `actor_opt/` and `critic_opt/`; each optimizer
    /// also stores its step count as a one-element `step` tensor.
    pub fn write_checkpoint(&self, w: &mut impl Write) -> Result<()> {
        let mut owned: Vec<(String, Tensor)> = Vec::new();
        for (prefix, set) in self.nets() {
            for (name, t) in set.iter() {
                owned.push((format!("{prefix}/{name}"), t.clone()));
            }
        }
        for (prefix, opt) in [("actor_opt", &self.actor_opt), ("critic_opt", &self.critic_opt)] {
            owned.push((
                format!("{prefix}/step"),
                Tensor::vector(vec![opt.step_count as f64]),
            ));
            for (name, t) in opt.moments() {
                owned.push((format!("{prefix}/{name}"), t.clone()));
            }
        }
        let items: Vec<(&str, &Tensor)> = owned.iter().map(|(n, t)| (n.as_str(), t)).collect();
        write_container(w, &items)
    }

    /// Restores a checkpoint written by an agent with the same configuration.
    pub fn read_checkpoint(&mut self, r: &mut impl Read) -> Result<()> {
        let mut sets: [ParamSet; 4] = Default::default();
        let mut restored = self.clone();
        let mut seen_steps = 0;
        for (name, t) in read_container(r)? {
            let (prefix, rest) = name
                .split_once('/')
                .ok_or_else(|| Error::Format(format!("unprefixed checkpoint entry {name:?}")))?;
            match prefix {
                "actor" => sets[0].insert(rest, t),
                "critic" => sets[1].insert(rest, t),
                "actor_target" => sets[2].insert(rest, t),
                "critic_target" => sets[3].insert(rest, t),
                "actor_opt" | "critic_opt" => {
                    let opt = if prefix == "actor_opt" {
                        &mut restored.actor_opt
                    } else {
                        &mut restored.critic_opt
                    };
                    if rest == "step" {
                        let v = t.data()[0];
                        if t.len() != 1 || !(v >= 0.0 && v.fract() == 0.0) {
                            return Err(Error::Format("bad optimizer step entry".into()));
                        }
                        opt.step_count = v as u64;
                        seen_steps += 1;
                    } else {
                        opt.set_moment(rest, t)?;
                    }
                }
                _ => return Err(Error::Format(format!("unknown checkpoint entry {name:?}"))),
            }
        }
        if seen_steps != 2 {
            return Err(Error::Format("checkpoint lacks optimizer step counts".into()));
        }
        restored.actor.params.load_values(&sets[0])?;
        restored.critic.params.load_values(&sets[1])?;
        restored.actor_target.params.load_values(&sets[2])?;
        restored.critic_target.params.load_values(&sets[3])?;
        *self = restored;
        Ok(())
    }
}
