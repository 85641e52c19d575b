//! Versioned JSON dump of trained networks.

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use super::train::{Algorithm, PolicySet, Trainer};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "usv-auv-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDump {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub params: Vec<f64>,
}

impl NetDump {
    pub fn of(net: &Mlp) -> Self {
        Self {
            sizes: net.sizes(),
            activations: net.activations(),
            params: net.to_flat(),
        }
    }

    pub fn restore(&self) -> Result<Mlp> {
        Mlp::from_flat(&self.sizes, &self.activations, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: usize,
    pub epochs: usize,
    /// One actor per AUV.
    pub actors: Vec<NetDump>,
    /// Online critics per AUV (one for DDPG, two for SAC).
    pub critics: Vec<Vec<NetDump>>,
}

impl Checkpoint {
    pub fn from_trainer(t: &Trainer, epochs: usize) -> Self {
        let cfg = t.config();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            algorithm: cfg.algorithm,
            seed: t.seed(),
            obs_dim: t.env().obs_dim(),
            act_dim: super::train::ACT_DIM,
            hidden: cfg.hidden,
            epochs,
            actors: t.agents().iter().map(|a| NetDump::of(a.actor())).collect(),
            critics: t
                .agents()
                .iter()
                .map(|a| a.critics().into_iter().map(NetDump::of).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed checkpoint: {e}")))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                ck.format, ck.version
            )));
        }
        Ok(ck)
    }

    pub fn policy(&self) -> Result<PolicySet> {
        let actors = self.actors.iter().map(NetDump::restore).collect::<Result<Vec<_>>>()?;
        if let Some(a) = actors.iter().find(|a| a.input_dim() != self.obs_dim) {
            return Err(Error::Config(format!(
                "actor input {} disagrees with header obs_dim {}",
                a.input_dim(),
                self.obs_dim
            )));
        }
        Ok(PolicySet {
            algorithm: self.algorithm,
            actors,
        })
    }
}
