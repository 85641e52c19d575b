use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use usv_auv_core::experiments::{self, write_atomic, ExperimentConfig, PolicySource};
use usv_auv_core::rl::Algorithm;
use usv_auv_core::task::SeaCondition;
use usv_auv_core::{Error, Result};

/// USV-assisted multi-AUV data collection: training, evaluation and positioning studies.
#[derive(Parser, Debug)]
#[command(name = "usv-auv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one learner per AUV and write metrics.csv and checkpoint.json.
    Train(Common),
    /// Evaluate a checkpoint or a baseline policy over several episodes.
    Eval(PolicyArgs),
    /// Compare FIM-planned USV positioning against fixed USV positions.
    ComparePositioning(PolicyArgs),
    /// Write per-step true and estimated trajectories of one episode.
    DumpTrajectories(PolicyArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file. Keys can also be set with `USVAUV_<KEY>` variables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    #[arg(long, value_enum)]
    sea: Option<SeaArg>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Evaluation episodes.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct PolicyArgs {
    #[command(flatten)]
    common: Common,
    /// Trained checkpoint. Without it the baseline given by --baseline is used.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "greedy")]
    baseline: Baseline,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AlgoArg {
    Ddpg,
    Sac,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SeaArg {
    Ideal,
    Extreme,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Baseline {
    Random,
    Greedy,
}

impl Common {
    /// Defaults, then the config file, then environment variables, then flags.
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let mut cfg = base.with_overrides(std::env::vars())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = self.algo {
            cfg.algorithm = match a {
                AlgoArg::Ddpg => Algorithm::Ddpg,
                AlgoArg::Sac => Algorithm::Sac,
            };
        }
        if let Some(s) = self.sea {
            cfg.sea_condition = match s {
                SeaArg::Ideal => SeaCondition::Ideal,
                SeaArg::Extreme => SeaCondition::Extreme,
            };
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        let out = cfg.output_dir.clone();
        write_atomic(&out.join("config.toml"), cfg.to_toml_string().as_bytes())?;
        Ok((cfg, out))
    }
}

impl PolicyArgs {
    fn source(&self) -> PolicySource {
        match (&self.checkpoint, self.baseline) {
            (Some(p), _) => PolicySource::Checkpoint(p.clone()),
            (None, Baseline::Random) => PolicySource::Random,
            (None, Baseline::Greedy) => PolicySource::Greedy,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let (cfg, out) = args.resolve()?;
            let total = cfg.epochs;
            let outcome = experiments::train(&cfg, &out, |m| {
                eprintln!(
                    "epoch {:>4}/{total}  sdr {:>9.3}  ec {:>9.3}  arps {:>9.3}",
                    m.epoch + 1,
                    m.sdr,
                    m.ec,
                    m.arps
                );
            })
            .inspect_err(|e| {
                if matches!(e, Error::TrainingDivergence { .. }) {
                    eprintln!("diagnostic written to {}", out.join(experiments::DIVERGENCE_FILE).display());
                }
            })?;
            let window = outcome.metrics.len().min(50);
            println!("{} {} epochs, seed {}, last {window} epochs:", cfg.algorithm, outcome.metrics.len(), cfg.seed);
            for (name, v) in outcome.tail_summary(window) {
                println!("{name:>6}: {v}");
            }
            println!("metrics: {}", outcome.metrics_path.display());
            println!("checkpoint: {}", outcome.checkpoint_path.display());
        }
        Command::Eval(args) => {
            let (cfg, out) = args.common.resolve()?;
            let src = args.source();
            let summary = experiments::eval(&cfg, &src, &out)?;
            println!("policy: {src}, sea: {}", cfg.sea_condition);
            print!("{summary}");
            println!("results: {}", out.join(experiments::EVAL_SUMMARY_FILE).display());
        }
        Command::ComparePositioning(args) => {
            let (cfg, out) = args.common.resolve()?;
            let src = args.source();
            let results = experiments::compare_positioning(&cfg, &src, &out)?;
            println!("policy: {src}, episodes: {}", cfg.episodes);
            for (name, r) in results {
                println!(
                    "{name:>14}: rmse {:.3} m  mean {:.3} m  fixes {}  dropouts {}",
                    r.rmse, r.mean_error, r.samples, r.dropouts
                );
            }
            println!("results: {}", out.join(experiments::POSITIONING_FILE).display());
        }
        Command::DumpTrajectories(args) => {
            let (cfg, out) = args.common.resolve()?;
            let steps = experiments::dump_trajectories(&cfg, &args.source(), &out)?;
            println!("{steps} steps written to {}", out.join(experiments::TRAJECTORY_FILE).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
