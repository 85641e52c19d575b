//! Experiment commands: training runs, policy evaluation, the USV positioning
//! comparison and trajectory dumps. Each command is deterministic in the configured
//! seed and writes its results as schema-tagged CSV files.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::ExperimentConfig;
pub use output::{write_atomic, CsvDoc};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::rl::{evaluate, run_episode, Checkpoint, EpisodeMetrics, EpochMetrics, EvalPolicy, MeanStd, PolicySet, Trainer};
use crate::task::{Action, EpisodeTraceRow, TaskConfig, TaskEnv, UsvMode};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const DIVERGENCE_FILE: &str = "divergence.txt";
pub const EVAL_EPISODES_FILE: &str = "eval_episodes.csv";
pub const EVAL_SUMMARY_FILE: &str = "eval_summary.csv";
pub const POSITIONING_FILE: &str = "positioning.csv";
pub const POSITIONING_STEPS_FILE: &str = "positioning_steps.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// Evaluation episodes start this far from the training seeds.
const EVAL_SEED_OFFSET: u64 = 1_000_000;

/// Seed of evaluation episode `i`.
pub fn eval_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(EVAL_SEED_OFFSET).wrapping_add(i as u64)
}

/// Where evaluation actions come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    Checkpoint(PathBuf),
    Random,
    Greedy,
}

impl std::fmt::Display for PolicySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicySource::Checkpoint(p) => write!(f, "checkpoint {}", p.display()),
            PolicySource::Random => f.write_str("random"),
            PolicySource::Greedy => f.write_str("greedy"),
        }
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_policy(src: &PolicySource, task: &TaskConfig) -> Result<Option<PolicySet>> {
    match src {
        PolicySource::Checkpoint(path) => {
            let policy = load_checkpoint(path)?.policy()?;
            policy.check_compatible(task)?;
            Ok(Some(policy))
        }
        PolicySource::Random | PolicySource::Greedy => Ok(None),
    }
}

fn eval_policy<'a>(src: &PolicySource, loaded: &'a Option<PolicySet>) -> EvalPolicy<'a> {
    match (src, loaded) {
        (_, Some(p)) => EvalPolicy::Trained(p),
        (PolicySource::Greedy, None) => EvalPolicy::Greedy,
        _ => EvalPolicy::Random,
    }
}

/// Mean ± std of the evaluation metrics across episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub episodes: usize,
    /// Sum data rate per time step.
    pub sdr: MeanStd,
    /// Sum data rate accumulated over an episode.
    pub sdr_episode: MeanStd,
    pub ec: MeanStd,
    pub arps: MeanStd,
    pub collisions: MeanStd,
    pub dropouts: MeanStd,
}

impl RunSummary {
    /// Summarises episodes in seed order, so the result does not depend on how the
    /// episodes were scheduled.
    pub fn from_episodes(episodes: &[EpisodeMetrics]) -> Self {
        let mut sorted = episodes.to_vec();
        sorted.sort_by_key(|e| e.seed);
        let col = |f: fn(&EpisodeMetrics) -> f64| MeanStd::of(&sorted.iter().map(f).collect::<Vec<_>>());
        Self {
            episodes: sorted.len(),
            sdr: col(|e| e.sdr),
            sdr_episode: col(|e| e.sdr_episode),
            ec: col(|e| e.ec),
            arps: col(|e| e.arps),
            collisions: col(|e| e.collisions as f64),
            dropouts: col(|e| e.dropouts as f64),
        }
    }

    fn rows(&self) -> Vec<(&'static str, MeanStd)> {
        vec![
            ("sdr", self.sdr),
            ("sdr_episode", self.sdr_episode),
            ("ec", self.ec),
            ("arps", self.arps),
            ("collisions", self.collisions),
            ("dropouts", self.dropouts),
        ]
    }
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "episodes: {}", self.episodes)?;
        for (name, v) in self.rows() {
            writeln!(f, "{name:>12}: {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<EpochMetrics>,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

impl TrainOutcome {
    /// Mean ± std of per-epoch SDR, EC and ARPS over the last `window` epochs.
    pub fn tail_summary(&self, window: usize) -> [(&'static str, MeanStd); 3] {
        let n = self.metrics.len();
        let tail = &self.metrics[n.saturating_sub(window)..];
        let col = |f: fn(&EpochMetrics) -> f64| MeanStd::of(&tail.iter().map(f).collect::<Vec<_>>());
        [("sdr", col(|m| m.sdr)), ("ec", col(|m| m.ec)), ("arps", col(|m| m.arps))]
    }
}

/// Trains one learner per AUV, then writes the epoch metrics and final checkpoint.
/// On divergence a diagnostic file is written to `out_dir` before the error returns.
pub fn train(cfg: &ExperimentConfig, out_dir: &Path, mut progress: impl FnMut(&EpochMetrics)) -> Result<TrainOutcome> {
    let task = cfg.task_config()?;
    let train_cfg = cfg.train_config()?;
    let mut trainer = Trainer::new(task, train_cfg, cfg.seed)?;
    let mut doc = CsvDoc::new("metrics", EpochMetrics::CSV_HEADER);
    let result = trainer.train(|m| {
        doc.row(&m.csv_row());
        progress(m);
    });
    let metrics = match result {
        Ok(m) => m,
        Err(e) => {
            if matches!(e, Error::TrainingDivergence { .. }) {
                let text = format!("{e}\n\n# configuration\n{}", cfg.to_toml_string());
                write_atomic(&out_dir.join(DIVERGENCE_FILE), text.as_bytes())?;
            }
            return Err(e);
        }
    };
    let metrics_path = out_dir.join(METRICS_FILE);
    let checkpoint_path = out_dir.join(CHECKPOINT_FILE);
    doc.write(&metrics_path)?;
    let ck = Checkpoint::from_trainer(&trainer, metrics.len());
    write_atomic(&checkpoint_path, ck.to_json().as_bytes())?;
    Ok(TrainOutcome {
        metrics,
        metrics_path,
        checkpoint_path,
    })
}

/// Runs `cfg.episodes` noise-free evaluation episodes and writes per-episode and
/// summary CSVs.
pub fn eval(cfg: &ExperimentConfig, src: &PolicySource, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let task = cfg.task_config()?;
    let loaded = load_policy(src, &task)?;
    let policy = eval_policy(src, &loaded);
    let seeds: Vec<u64> = (0..cfg.episodes).map(|i| eval_seed(cfg.seed, i)).collect();
    let episodes = evaluate(&task, policy, &seeds)?;

    let mut doc = CsvDoc::new(
        "eval-episodes",
        "seed,steps,sdr,sdr_episode,ec,ec_episode,arps,collected,collisions,dropouts",
    );
    for e in &episodes {
        doc.row(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            e.seed, e.steps, e.sdr, e.sdr_episode, e.ec, e.ec_episode, e.arps, e.collected, e.collisions, e.dropouts
        ));
    }
    doc.write(&out_dir.join(EVAL_EPISODES_FILE))?;

    let summary = RunSummary::from_episodes(&episodes);
    let mut doc = CsvDoc::new("eval-summary", "metric,mean,std,episodes");
    for (name, v) in summary.rows() {
        doc.row(&format!("{name},{},{},{}", v.mean, v.std, v.n));
    }
    doc.write(&out_dir.join(EVAL_SUMMARY_FILE))?;
    Ok(summary)
}

/// USV positioning strategies compared on identical AUV trajectories.
pub fn positioning_strategies() -> [(&'static str, UsvMode); 3] {
    [
        ("fim", UsvMode::Planned),
        ("fixed_0_0", UsvMode::Fixed(Point2::new(0.0, 0.0))),
        ("fixed_100_100", UsvMode::Fixed(Point2::new(100.0, 100.0))),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategyResult {
    pub rmse: f64,
    pub mean_error: f64,
    pub samples: usize,
    pub dropouts: usize,
}

/// Horizontal error of every fix (None for dropouts), per strategy, for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct PositioningEpisode {
    pub seed: u64,
    /// `(t, auv_id, error)` per strategy.
    pub errors: Vec<Vec<(f64, usize, Option<f64>)>>,
}

fn collect_fixes(env: &TaskEnv, into: &mut Vec<(f64, usize, Option<f64>)>, truths: &mut Vec<Point2>) {
    for r in env.last_measurements() {
        into.push((r.t, r.auv_id, r.estimate.map(|p| p.distance(r.truth))));
        truths.push(r.truth);
    }
}

/// Runs the policy once with FIM planning, then replays its AUV commands with the USV
/// held at each fixed point. The same seed gives the same nodes and measurement noise.
pub fn positioning_episode(task: &TaskConfig, policy: EvalPolicy<'_>, seed: u64) -> Result<PositioningEpisode> {
    let strategies = positioning_strategies();
    let m = task.n_auvs();
    let vmax = task.auv_vmax;
    let mut errors = Vec::with_capacity(strategies.len());
    let mut commands: Vec<Vec<Action>> = Vec::new();
    let mut reference: Vec<Point2> = Vec::new();

    for (i, (_, mode)) in strategies.iter().enumerate() {
        let cfg = TaskConfig {
            usv_mode: *mode,
            ..task.clone()
        };
        let mut env = TaskEnv::new(cfg)?;
        let mut obs = env.reset(seed)?;
        let mut fixes = Vec::new();
        let mut truths = Vec::new();
        collect_fixes(&env, &mut fixes, &mut truths);
        let mut step = 0;
        while !env.is_done() {
            let actions = if i == 0 {
                let a = match policy {
                    EvalPolicy::Trained(p) => (0..m).map(|k| Action::from_unit(&p.act(k, &obs[k]), vmax)).collect(),
                    EvalPolicy::Greedy => env.greedy_actions(),
                    EvalPolicy::Random => {
                        use rand::{Rng, SeedableRng};
                        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (step as u64).rotate_left(17));
                        (0..m)
                            .map(|_| {
                                let a = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                                Action::from_unit(&a, vmax)
                            })
                            .collect()
                    }
                };
                commands.push(a);
                &commands[step]
            } else {
                &commands[step]
            };
            obs = env.step(actions)?.observations;
            collect_fixes(&env, &mut fixes, &mut truths);
            step += 1;
        }
        if i == 0 {
            reference = truths;
        } else if truths != reference {
            return Err(Error::Contract(format!(
                "AUV trajectory under strategy {} differs from the planned run",
                strategies[i].0
            )));
        }
        errors.push(fixes);
    }
    Ok(PositioningEpisode { seed, errors })
}

/// Aggregates per-strategy RMSE over episodes.
pub fn positioning_summary(episodes: &[PositioningEpisode]) -> Vec<StrategyResult> {
    let n = positioning_strategies().len();
    (0..n)
        .map(|s| {
            let mut r = StrategyResult::default();
            let (mut sq, mut sum) = (0.0, 0.0);
            let mut sorted: Vec<&PositioningEpisode> = episodes.iter().collect();
            sorted.sort_by_key(|e| e.seed);
            for e in sorted {
                for (_, _, err) in &e.errors[s] {
                    match err {
                        Some(d) => {
                            sq += d * d;
                            sum += d;
                            r.samples += 1;
                        }
                        None => r.dropouts += 1,
                    }
                }
            }
            if r.samples > 0 {
                r.rmse = (sq / r.samples as f64).sqrt();
                r.mean_error = sum / r.samples as f64;
            }
            r
        })
        .collect()
}

/// Compares FIM planning with the two fixed USV positions over `cfg.episodes` episodes.
pub fn compare_positioning(
    cfg: &ExperimentConfig,
    src: &PolicySource,
    out_dir: &Path,
) -> Result<Vec<(&'static str, StrategyResult)>> {
    cfg.validate()?;
    let task = cfg.task_config()?;
    let loaded = load_policy(src, &task)?;
    let policy = eval_policy(src, &loaded);
    let seeds: Vec<u64> = (0..cfg.episodes).map(|i| eval_seed(cfg.seed, i)).collect();
    let episodes: Vec<PositioningEpisode> = seeds
        .par_iter()
        .map(|&s| positioning_episode(&task, policy, s))
        .collect::<Result<_>>()?;
    let names = positioning_strategies().map(|(n, _)| n);

    let mut steps = CsvDoc::new("positioning-steps", "seed,t,auv_id,strategy,error");
    for e in &episodes {
        for (s, fixes) in e.errors.iter().enumerate() {
            for (t, k, err) in fixes {
                let err = err.map(|d| d.to_string()).unwrap_or_default();
                steps.row(&format!("{},{t},{k},{},{err}", e.seed, names[s]));
            }
        }
    }
    steps.write(&out_dir.join(POSITIONING_STEPS_FILE))?;

    let results: Vec<(&'static str, StrategyResult)> = names.into_iter().zip(positioning_summary(&episodes)).collect();
    let mut doc = CsvDoc::new("positioning", "strategy,rmse,mean_error,samples,dropouts");
    for (name, r) in &results {
        doc.row(&format!("{name},{},{},{},{}", r.rmse, r.mean_error, r.samples, r.dropouts));
    }
    doc.write(&out_dir.join(POSITIONING_FILE))?;
    Ok(results)
}

/// One evaluation episode written as a wide per-step trajectory table and a long trace.
pub fn dump_trajectories(cfg: &ExperimentConfig, src: &PolicySource, out_dir: &Path) -> Result<usize> {
    cfg.validate()?;
    let task = cfg.task_config()?;
    let loaded = load_policy(src, &task)?;
    let policy = eval_policy(src, &loaded);
    let mut rows: Vec<EpisodeTraceRow> = Vec::new();
    let metrics = run_episode(&task, policy, eval_seed(cfg.seed, 0), Some(&mut rows))?;
    let m = task.n_auvs();

    let mut header = String::from("t,usv_x,usv_y");
    for k in 0..m {
        header.push_str(&format!(",x_{k},y_{k},x_hat_{k},y_hat_{k}"));
    }
    let mut wide = CsvDoc::new("trajectory", &header);
    for step in rows.chunks(m) {
        let mut line = format!("{},{},{}", step[0].t, step[0].usv.x, step[0].usv.y);
        for r in step {
            line.push_str(&format!(",{},{},{},{}", r.truth.x, r.truth.y, r.estimate.x, r.estimate.y));
        }
        wide.row(&line);
    }
    wide.write(&out_dir.join(TRAJECTORY_FILE))?;

    let mut long = CsvDoc::new("episode-trace", EpisodeTraceRow::CSV_HEADER);
    for r in &rows {
        long.row(&r.csv_row());
    }
    long.write(&out_dir.join(TRACE_FILE))?;
    Ok(metrics.steps)
}
