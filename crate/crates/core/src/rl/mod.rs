//! Actor-critic learners: networks, replay, DDPG, SAC and the training loop.

pub mod checkpoint;
pub mod ddpg;
pub mod eval;
pub mod mlp;
pub mod optim;
pub mod replay;
pub mod sac;
pub mod train;

pub use checkpoint::Checkpoint;
pub use eval::{evaluate, run_episode, EpisodeMetrics, EvalPolicy, MeanStd};
pub use train::{Agent, Algorithm, EpochMetrics, PolicySet, TrainConfig, Trainer};
