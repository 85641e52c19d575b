//! Policy evaluation episodes and across-episode summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::{PolicySet, ACT_DIM};
use crate::error::Result;
use crate::task::{Action, EpisodeTraceRow, TaskConfig, TaskEnv};

/// How AUV actions are chosen during evaluation.
#[derive(Debug, Clone, Copy)]
pub enum EvalPolicy<'a> {
    /// Noise-free trained actors.
    Trained(&'a PolicySet),
    /// Uniform random unit-square commands.
    Random,
    /// Scripted nearest-node collector.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub seed: u64,
    pub steps: usize,
    /// Sum data rate per time step.
    pub sdr: f64,
    /// Sum data rate over the episode.
    pub sdr_episode: f64,
    /// Energy per time step.
    pub ec: f64,
    pub ec_episode: f64,
    /// Average reward per time step (mean over AUVs).
    pub arps: f64,
    pub collected: f64,
    pub collisions: usize,
    pub dropouts: usize,
}

fn random_policy_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Runs one episode from `seed`, optionally appending per-step trace rows.
pub fn run_episode(
    env_cfg: &TaskConfig,
    policy: EvalPolicy<'_>,
    seed: u64,
    mut trace: Option<&mut Vec<EpisodeTraceRow>>,
) -> Result<EpisodeMetrics> {
    if let EvalPolicy::Trained(p) = policy {
        p.check_compatible(env_cfg)?;
    }
    let mut env = TaskEnv::new(env_cfg.clone())?;
    let mut obs = env.reset(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(random_policy_seed(seed));
    let m = env.n_auvs();
    let vmax = env_cfg.auv_vmax;
    let mut out = EpisodeMetrics {
        seed,
        ..EpisodeMetrics::default()
    };
    let mut reward_sum = 0.0;
    while !env.is_done() {
        let actions: Vec<Action> = match policy {
            EvalPolicy::Trained(p) => (0..m).map(|k| Action::from_unit(&p.act(k, &obs[k]), vmax)).collect(),
            EvalPolicy::Random => (0..m)
                .map(|_| {
                    let a: Vec<f64> = (0..ACT_DIM).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    Action::from_unit(&a, vmax)
                })
                .collect(),
            EvalPolicy::Greedy => env.greedy_actions(),
        };
        let step = env.step(&actions)?;
        if let Some(rows) = trace.as_deref_mut() {
            rows.extend(env.trace_rows(&step));
        }
        out.steps += 1;
        out.sdr_episode += step.info.sum_rate;
        out.ec_episode += step.info.energy;
        out.collisions += step.info.collisions;
        reward_sum += step.rewards.iter().sum::<f64>() / m as f64;
        obs = step.observations;
    }
    let steps = out.steps.max(1) as f64;
    out.sdr = out.sdr_episode / steps;
    out.ec = out.ec_episode / steps;
    out.arps = reward_sum / steps;
    out.collected = env.collected();
    out.dropouts = env.dropouts();
    Ok(out)
}

/// Runs one episode per seed in parallel; results keep the order of `seeds`.
pub fn evaluate(env_cfg: &TaskConfig, policy: EvalPolicy<'_>, seeds: &[u64]) -> Result<Vec<EpisodeMetrics>> {
    seeds
        .par_iter()
        .map(|&seed| run_episode(env_cfg, policy, seed, None))
        .collect()
}

/// Mean and sample standard deviation (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::train::{Algorithm, Trainer, TrainConfig};

    #[test]
    fn mean_std_examples() {
        assert_eq!(MeanStd::of(&[3.0]), MeanStd { mean: 3.0, std: 0.0, n: 1 });
        let s = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parallel_evaluation_matches_sequential() {
        let cfg = TaskConfig::default();
        let seeds = [5, 6, 7, 8];
        let par = evaluate(&cfg, EvalPolicy::Random, &seeds).unwrap();
        let seq: Vec<_> = seeds
            .iter()
            .map(|&s| run_episode(&cfg, EvalPolicy::Random, s, None).unwrap())
            .collect();
        assert_eq!(par, seq);
        assert!(par.iter().all(|m| m.steps == 100));
    }

    #[test]
    fn trace_rows_stay_in_bounds() {
        let cfg = TaskConfig::default();
        let mut rows = Vec::new();
        let m = run_episode(&cfg, EvalPolicy::Greedy, 3, Some(&mut rows)).unwrap();
        assert_eq!(rows.len(), 2 * m.steps);
        assert!(rows
            .iter()
            .all(|r| cfg.area.contains(r.truth) && cfg.area.contains(r.usv)));
    }

    #[test]
    fn trained_policy_dimension_mismatch() {
        let t = Trainer::new(
            TaskConfig::default(),
            TrainConfig {
                hidden: 4,
                algorithm: Algorithm::Ddpg,
                ..TrainConfig::default()
            },
            0,
        )
        .unwrap();
        let policy = t.policy();
        let other = TaskConfig {
            nearest_nodes: 3,
            ..TaskConfig::default()
        };
        assert!(run_episode(&other, EvalPolicy::Trained(&policy), 0, None).is_err());
        assert!(run_episode(&TaskConfig::default(), EvalPolicy::Trained(&policy), 0, None).is_ok());
    }
}
