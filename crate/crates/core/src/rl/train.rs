//! Independent-learner training loop.
//!
//! Every AUV owns an actor-critic pair and a replay buffer. Per time step the
//! environment has already planned the USV path and re-fixed every AUV; then each AUV
//! in turn acts, updates once its buffer holds the warm-up amount, and stores the
//! transition that ended at the current observation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ddpg::{DdpgAgent, UpdateStats};
use super::mlp::Mlp;
use super::optim::OptimizerKind;
use super::replay::{ReplayBuffer, Transition};
use super::sac::{mean_action, SacAgent};
use crate::error::{Error, Result};
use crate::task::{Action, StepOutcome, TaskConfig, TaskEnv, TraceEvent};

/// Learner action dimension: a planar velocity vector in [-1, 1]².
pub const ACT_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ddpg,
    Sac,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Ddpg => "ddpg",
            Algorithm::Sac => "sac",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddpg" => Ok(Algorithm::Ddpg),
            "sac" => Ok(Algorithm::Sac),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    /// Transitions per buffer before updates start; actions are uniform random until then.
    pub warmup: usize,
    /// Std of the Gaussian exploration noise added to DDPG actions.
    pub noise_std: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub hidden: usize,
    /// SAC entropy temperature.
    pub alpha: f64,
    pub optimizer: OptimizerKind,
    /// Rewards are multiplied by this before they enter the replay buffer.
    pub reward_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ddpg,
            gamma: 0.99,
            tau: 0.005,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            batch: 64,
            buffer_capacity: 100_000,
            warmup: 1000,
            noise_std: 0.2,
            epochs: 300,
            steps_per_epoch: 100,
            hidden: 128,
            alpha: 0.2,
            optimizer: OptimizerKind::Adam,
            reward_scale: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.gamma > 0.0 && self.gamma < 1.0, "gamma must lie in (0, 1)"),
            (self.tau > 0.0 && self.tau <= 1.0, "tau must lie in (0, 1]"),
            (self.lr_actor >= 0.0 && self.lr_critic >= 0.0, "learning rates must be non-negative"),
            (self.batch > 0, "batch must be positive"),
            (self.buffer_capacity >= self.batch, "buffer_capacity must hold a batch"),
            (self.noise_std >= 0.0, "noise_std must be non-negative"),
            (self.steps_per_epoch > 0, "steps_per_epoch must be positive"),
            (self.hidden > 0, "hidden must be positive"),
            (self.alpha >= 0.0, "alpha must be non-negative"),
            (self.reward_scale > 0.0 && self.reward_scale.is_finite(), "reward_scale must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Agent {
    Ddpg(DdpgAgent),
    Sac(SacAgent),
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, cfg: &TrainConfig, rng: &mut R) -> Self {
        match cfg.algorithm {
            Algorithm::Ddpg => Agent::Ddpg(DdpgAgent::new(obs_dim, ACT_DIM, cfg, rng)),
            Algorithm::Sac => Agent::Sac(SacAgent::new(obs_dim, ACT_DIM, cfg, rng)),
        }
    }

    pub fn actor(&self) -> &Mlp {
        match self {
            Agent::Ddpg(a) => &a.actor,
            Agent::Sac(a) => &a.actor,
        }
    }

    pub fn critics(&self) -> Vec<&Mlp> {
        match self {
            Agent::Ddpg(a) => vec![&a.critic],
            Agent::Sac(a) => vec![&a.q1, &a.q2],
        }
    }

    /// Noise-free action.
    pub fn act(&self, obs: &[f64]) -> Vec<f64> {
        match self {
            Agent::Ddpg(a) => a.act(obs),
            Agent::Sac(a) => a.act(obs),
        }
    }

    pub fn explore<R: Rng + ?Sized>(&self, obs: &[f64], noise_std: f64, rng: &mut R) -> Vec<f64> {
        match self {
            Agent::Ddpg(a) => a
                .act(obs)
                .into_iter()
                .map(|v| {
                    let n: f64 = rng.sample(StandardNormal);
                    (v + noise_std * n).clamp(-1.0, 1.0)
                })
                .collect(),
            Agent::Sac(a) => a.sample(obs, rng),
        }
    }

    fn update<R: Rng + ?Sized>(
        &mut self,
        buf: &ReplayBuffer,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<std::result::Result<UpdateStats, String>> {
        let batch = buf.sample(cfg.batch, rng)?;
        Ok(match self {
            Agent::Ddpg(a) => a.update(&batch, cfg),
            Agent::Sac(a) => a.update(&batch, cfg, rng),
        })
    }
}

/// Trained actors, enough to run the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    pub algorithm: Algorithm,
    pub actors: Vec<Mlp>,
}

impl PolicySet {
    pub fn obs_dim(&self) -> usize {
        self.actors.first().map_or(0, Mlp::input_dim)
    }

    pub fn act(&self, k: usize, obs: &[f64]) -> Vec<f64> {
        match self.algorithm {
            Algorithm::Ddpg => self.actors[k].forward_one(obs),
            Algorithm::Sac => mean_action(&self.actors[k], obs),
        }
    }

    pub fn check_compatible(&self, env: &TaskConfig) -> Result<()> {
        if self.actors.len() != env.n_auvs() || self.actors.iter().any(|a| a.input_dim() != env.obs_dim()) {
            return Err(Error::Config(format!(
                "policy has {} actors with input {} but the task has {} AUVs with observation size {}",
                self.actors.len(),
                self.obs_dim(),
                env.n_auvs(),
                env.obs_dim()
            )));
        }
        Ok(())
    }
}

/// Per-epoch training metrics, averaged per time step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Sum over AUVs of the data rate.
    pub sdr: f64,
    /// Sum over AUVs of the propulsion energy.
    pub ec: f64,
    /// Mean over AUVs of the reward.
    pub arps: f64,
    pub steps: usize,
    pub critic_loss: f64,
    pub actor_loss: f64,
}

impl EpochMetrics {
    pub const CSV_HEADER: &'static str = "epoch,sdr,ec,arps";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.epoch, self.sdr, self.ec, self.arps)
    }
}

/// Episode seed for training epoch `epoch`.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_add(epoch as u64)
}

pub struct Trainer {
    cfg: TrainConfig,
    env: TaskEnv,
    agents: Vec<Agent>,
    buffers: Vec<ReplayBuffer>,
    rng: ChaCha8Rng,
    seed: u64,
    epoch: usize,
    trace: Option<Vec<TraceEvent>>,
}

struct Pending {
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    done: bool,
}

impl Trainer {
    pub fn new(env_cfg: TaskConfig, cfg: TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let env = TaskEnv::new(env_cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs_dim = env.obs_dim();
        let agents = (0..env.n_auvs()).map(|_| Agent::new(obs_dim, &cfg, &mut rng)).collect();
        let buffers = (0..env.n_auvs()).map(|_| ReplayBuffer::new(cfg.buffer_capacity)).collect();
        Ok(Self {
            cfg,
            env,
            agents,
            buffers,
            rng,
            seed,
            epoch: 0,
            trace: None,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn env(&self) -> &TaskEnv {
        &self.env
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn buffers(&self) -> &[ReplayBuffer] {
        &self.buffers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn policy(&self) -> PolicySet {
        PolicySet {
            algorithm: self.cfg.algorithm,
            actors: self.agents.iter().map(|a| a.actor().clone()).collect(),
        }
    }

    /// Records plan/measure/act/update/store events from now on.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
        self.env.enable_trace();
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn record(&mut self, e: TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(e);
        }
    }

    fn pull_env_trace(&mut self) {
        let events = self.env.take_trace();
        if let Some(t) = self.trace.as_mut() {
            t.extend(events);
        }
    }

    fn store(&mut self, k: usize, p: &Pending, s_next: &[f64]) -> Result<()> {
        self.record(TraceEvent::Store(k));
        self.buffers[k].push(Transition {
            s: p.obs[k].clone(),
            a: p.actions[k].clone(),
            r: p.rewards[k] * self.cfg.reward_scale,
            s_next: s_next.to_vec(),
            done: p.done,
        })
    }

    /// Runs one training episode.
    pub fn run_epoch(&mut self) -> Result<EpochMetrics> {
        let epoch = self.epoch;
        let mut obs = self.env.reset(epoch_seed(self.seed, epoch))?;
        self.pull_env_trace();
        let m = self.agents.len();
        let vmax = self.env.config().auv_vmax;
        let mut pending: Option<Pending> = None;
        let mut metrics = EpochMetrics {
            epoch,
            ..EpochMetrics::default()
        };
        let mut n_updates = 0usize;

        for step in 0..self.cfg.steps_per_epoch {
            let mut actions = Vec::with_capacity(m);
            for k in 0..m {
                self.record(TraceEvent::Act(k));
                let a = if self.buffers[k].len() < self.cfg.warmup {
                    (0..ACT_DIM).map(|_| self.rng.random_range(-1.0..=1.0)).collect()
                } else {
                    self.agents[k].explore(&obs[k], self.cfg.noise_std, &mut self.rng)
                };
                actions.push(a);

                if self.buffers[k].len() >= self.cfg.warmup.max(self.cfg.batch) {
                    self.record(TraceEvent::Update(k));
                    let stats = self.agents[k]
                        .update(&self.buffers[k], &self.cfg, &mut self.rng)?
                        .map_err(|detail| Error::TrainingDivergence {
                            epoch,
                            step,
                            agent: k,
                            detail,
                        })?;
                    metrics.critic_loss += stats.critic_loss;
                    metrics.actor_loss += stats.actor_loss;
                    n_updates += 1;
                }
                if let Some(p) = &pending {
                    self.store(k, p, &obs[k])?;
                }
            }

            let commands: Vec<Action> = actions.iter().map(|a| Action::from_unit(a, vmax)).collect();
            let out: StepOutcome = self.env.step(&commands)?;
            self.pull_env_trace();
            metrics.steps += 1;
            metrics.sdr += out.info.sum_rate;
            metrics.ec += out.info.energy;
            metrics.arps += out.rewards.iter().sum::<f64>() / m as f64;

            pending = Some(Pending {
                obs: std::mem::replace(&mut obs, out.observations),
                actions,
                rewards: out.rewards,
                done: out.done,
            });
            if out.done {
                break;
            }
        }
        if let Some(p) = pending {
            for k in 0..m {
                self.store(k, &p, &obs[k])?;
            }
        }

        let steps = metrics.steps.max(1) as f64;
        metrics.sdr /= steps;
        metrics.ec /= steps;
        metrics.arps /= steps;
        if n_updates > 0 {
            metrics.critic_loss /= n_updates as f64;
            metrics.actor_loss /= n_updates as f64;
        }
        self.epoch += 1;
        Ok(metrics)
    }

    /// Runs the configured number of epochs, reporting each as it finishes.
    pub fn train(&mut self, mut on_epoch: impl FnMut(&EpochMetrics)) -> Result<Vec<EpochMetrics>> {
        let mut all = Vec::with_capacity(self.cfg.epochs);
        for _ in 0..self.cfg.epochs {
            let m = self.run_epoch()?;
            on_epoch(&m);
            all.push(m);
        }
        Ok(all)
    }
}
