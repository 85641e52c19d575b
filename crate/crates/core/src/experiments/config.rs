//! Flat key-value experiment configuration.
//!
//! Every constant of the simulator is one top-level TOML key. Missing keys take their
//! defaults, unknown keys are rejected, and any key can be overridden through an
//! environment variable `USVAUV_<KEY>` (upper case) whose value is a TOML literal.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::PlannerConfig;
use crate::geometry::{Point2, Rect};
use crate::ocean::{Vortex, VortexSet, WaveConfig};
use crate::rl::optim::OptimizerKind;
use crate::rl::{Algorithm, TrainConfig};
use crate::task::{LinkBudget, RewardWeights, SeaCondition, TaskConfig, UsvMode};
use crate::usbl::UsblConfig;

/// Prefix of environment variables that override configuration keys.
pub const ENV_PREFIX: &str = "USVAUV_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub sea_condition: SeaCondition,
    /// Evaluation episodes.
    pub episodes: usize,

    pub area_width: f64,
    pub area_height: f64,
    pub n_nodes: usize,
    pub node_queue: f64,
    pub comm_radius: f64,
    pub auv_depths: Vec<f64>,
    /// `[x, y]` per AUV.
    pub auv_starts: Vec<[f64; 2]>,
    pub auv_vmax: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub nearest_nodes: usize,
    pub w_rate: f64,
    pub w_energy: f64,
    pub w_coll: f64,
    pub w_usv: f64,
    pub c_e: f64,
    pub p_tx_db: f64,
    pub kappa: f64,
    pub link_freq_khz: f64,
    pub link_min_distance: f64,
    pub d_coll: f64,
    pub l_floor: f64,

    /// USBL carrier per AUV (Hz).
    pub usbl_frequencies: Vec<f64>,
    pub usbl_spacing: f64,
    pub sound_speed: f64,
    pub usbl_sigma: f64,

    pub planner_grid: f64,
    pub planner_refine_iters: usize,
    pub planner_refine_step: f64,
    pub usv_vmax: f64,

    pub water_depth: f64,
    pub gravity: f64,
    pub omega: f64,
    pub eta0: f64,
    pub offshore_length: f64,
    pub wave_dx: f64,
    pub courant: f64,

    /// Explicit vortices `[x, y, Γ, δ]`; when empty, `vortex_count` are drawn from `vortex_seed`.
    pub vortices: Vec<[f64; 4]>,
    pub vortex_count: usize,
    pub vortex_seed: u64,
    pub vortex_gamma_min: f64,
    pub vortex_gamma_max: f64,
    pub vortex_delta_min: f64,
    pub vortex_delta_max: f64,

    pub algorithm: Algorithm,
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    pub noise_std: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub hidden: usize,
    pub alpha: f64,
    pub optimizer: OptimizerKind,
    pub reward_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let task = TaskConfig::default();
        let train = TrainConfig::default();
        let wave = WaveConfig::default();
        let usbl = UsblConfig::default();
        let planner = PlannerConfig::default();
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            sea_condition: task.sea,
            episodes: 20,
            area_width: task.area.width(),
            area_height: task.area.height(),
            n_nodes: task.n_nodes,
            node_queue: task.node_queue,
            comm_radius: task.comm_radius,
            auv_depths: task.auv_depths.clone(),
            auv_starts: task.auv_starts.iter().map(|p| [p.x, p.y]).collect(),
            auv_vmax: task.auv_vmax,
            dt: task.dt,
            max_steps: task.max_steps,
            nearest_nodes: task.nearest_nodes,
            w_rate: task.weights.w_rate,
            w_energy: task.weights.w_energy,
            w_coll: task.weights.w_coll,
            w_usv: task.weights.w_usv,
            c_e: task.c_e,
            p_tx_db: task.link.p_tx_db,
            kappa: task.link.kappa,
            link_freq_khz: task.link.freq_khz,
            link_min_distance: task.link.min_distance,
            d_coll: task.d_coll,
            l_floor: task.l_floor,
            usbl_frequencies: task.usbl.iter().map(|c| c.frequency_hz).collect(),
            usbl_spacing: usbl.spacing,
            sound_speed: usbl.sound_speed,
            usbl_sigma: usbl.sigma,
            planner_grid: planner.grid_resolution,
            planner_refine_iters: planner.refine_iters,
            planner_refine_step: planner.refine_step,
            usv_vmax: planner.usv_vmax,
            water_depth: wave.depth,
            gravity: wave.gravity,
            omega: wave.omega,
            eta0: wave.eta0,
            offshore_length: wave.offshore_length,
            wave_dx: wave.dx,
            courant: wave.courant,
            vortices: Vec::new(),
            vortex_count: crate::task::DEFAULT_VORTEX_COUNT,
            vortex_seed: crate::task::DEFAULT_VORTEX_SEED,
            vortex_gamma_min: crate::task::DEFAULT_VORTEX_GAMMA.0,
            vortex_gamma_max: crate::task::DEFAULT_VORTEX_GAMMA.1,
            vortex_delta_min: crate::task::DEFAULT_VORTEX_DELTA.0,
            vortex_delta_max: crate::task::DEFAULT_VORTEX_DELTA.1,
            algorithm: train.algorithm,
            gamma: train.gamma,
            tau: train.tau,
            lr_actor: train.lr_actor,
            lr_critic: train.lr_critic,
            batch: train.batch,
            buffer_capacity: train.buffer_capacity,
            warmup: train.warmup,
            noise_std: train.noise_std,
            epochs: train.epochs,
            steps_per_epoch: train.steps_per_epoch,
            hidden: train.hidden,
            alpha: train.alpha,
            optimizer: train.optimizer,
            reward_scale: train.reward_scale,
        }
    }
}

fn toml_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(toml_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// All keys with their current values.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Applies `USVAUV_<KEY>=<toml literal>` overrides. Values that do not parse as a
    /// TOML literal are taken as strings. Unknown keys are errors.
    pub fn with_overrides<I, K, V>(self, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut table: toml::Table = toml::Table::try_from(&self).map_err(toml_err)?;
        let mut touched = false;
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if !table.contains_key(&key) {
                return Err(Error::Config(format!("unknown configuration key {key:?} in {}", k.as_ref())));
            }
            let value = toml::from_str::<toml::Table>(&format!("v = {}", v.as_ref()))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(v.as_ref().to_string()));
            table.insert(key, value);
            touched = true;
        }
        if !touched {
            return Ok(self);
        }
        table.try_into().map_err(toml_err)
    }

    pub fn area(&self) -> Rect {
        Rect::new(0.0, 0.0, self.area_width, self.area_height)
    }

    pub fn vortex_set(&self) -> Result<VortexSet> {
        if self.vortices.is_empty() {
            if self.vortex_gamma_min > self.vortex_gamma_max
                || self.vortex_delta_min > self.vortex_delta_max
                || !(self.vortex_delta_min > 0.0)
            {
                return Err(Error::Config("vortex ranges must be ordered with positive radii".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.vortex_seed);
            Ok(VortexSet::random(
                &mut rng,
                self.vortex_count,
                &self.area(),
                (self.vortex_gamma_min, self.vortex_gamma_max),
                (self.vortex_delta_min, self.vortex_delta_max),
            ))
        } else {
            VortexSet::new(
                self.vortices
                    .iter()
                    .map(|v| Vortex {
                        center: Point2::new(v[0], v[1]),
                        gamma: v[2],
                        delta: v[3],
                    })
                    .collect(),
            )
        }
    }

    pub fn task_config(&self) -> Result<TaskConfig> {
        let area = self.area();
        let base = UsblConfig {
            frequency_hz: 0.0,
            spacing: self.usbl_spacing,
            sound_speed: self.sound_speed,
            sigma: self.usbl_sigma,
        };
        let cfg = TaskConfig {
            area,
            n_nodes: self.n_nodes,
            node_queue: self.node_queue,
            comm_radius: self.comm_radius,
            auv_depths: self.auv_depths.clone(),
            auv_starts: self.auv_starts.iter().map(|p| Point2::new(p[0], p[1])).collect(),
            auv_vmax: self.auv_vmax,
            dt: self.dt,
            max_steps: self.max_steps,
            nearest_nodes: self.nearest_nodes,
            weights: RewardWeights {
                w_rate: self.w_rate,
                w_energy: self.w_energy,
                w_coll: self.w_coll,
                w_usv: self.w_usv,
            },
            c_e: self.c_e,
            link: LinkBudget {
                p_tx_db: self.p_tx_db,
                kappa: self.kappa,
                freq_khz: self.link_freq_khz,
                min_distance: self.link_min_distance,
            },
            d_coll: self.d_coll,
            l_floor: self.l_floor,
            sea: self.sea_condition,
            usbl: self.usbl_frequencies.iter().map(|&f| base.with_frequency(f)).collect(),
            planner: PlannerConfig {
                grid_resolution: self.planner_grid,
                refine_iters: self.planner_refine_iters,
                refine_step: self.planner_refine_step,
                usv_vmax: self.usv_vmax,
                bounds: area,
            },
            usv_mode: UsvMode::Planned,
            wave: WaveConfig {
                depth: self.water_depth,
                gravity: self.gravity,
                omega: self.omega,
                eta0: self.eta0,
                offshore_length: self.offshore_length,
                dx: self.wave_dx,
                courant: self.courant,
            },
            vortices: self.vortex_set()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            algorithm: self.algorithm,
            gamma: self.gamma,
            tau: self.tau,
            lr_actor: self.lr_actor,
            lr_critic: self.lr_critic,
            batch: self.batch,
            buffer_capacity: self.buffer_capacity,
            warmup: self.warmup,
            noise_std: self.noise_std,
            epochs: self.epochs,
            steps_per_epoch: self.steps_per_epoch,
            hidden: self.hidden,
            alpha: self.alpha,
            optimizer: self.optimizer,
            reward_scale: self.reward_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.task_config()?;
        self.train_config()?;
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be positive".into()));
        }
        Ok(())
    }
}
