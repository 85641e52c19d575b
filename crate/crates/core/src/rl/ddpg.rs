//! Deep deterministic policy gradient.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::mlp::{Activation, Grads, Mlp};
use super::optim::Optimizer;
use super::replay::Batch;
use super::train::TrainConfig;

/// Final-layer init range for actors and critics.
pub const LAST_LAYER_SCALE: f64 = 3e-3;

pub(crate) fn join(s: ArrayView2<f64>, a: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[s, a]).expect("batch sizes agree")
}

/// Bootstrapped targets `y = r + γ(1 − done)·Q′(s′, μ′(s′))`.
pub fn ddpg_targets(actor_t: &Mlp, critic_t: &Mlp, b: &Batch, gamma: f64) -> Array1<f64> {
    let a_next = actor_t.forward(b.s_next.view());
    let q_next = critic_t.forward(join(b.s_next.view(), a_next.view()).view());
    let q_next = q_next.column(0);
    Array1::from_shape_fn(b.len(), |i| b.r[i] + gamma * (1.0 - b.done[i]) * q_next[i])
}

/// Mean squared error of `Q(s, a)` against `y` and its parameter gradient.
pub fn critic_loss_and_grad(critic: &Mlp, s: ArrayView2<f64>, a: ArrayView2<f64>, y: &Array1<f64>) -> (f64, Grads) {
    let n = y.len() as f64;
    let cache = critic.forward_cached(join(s, a).view());
    let diff = &cache.output().column(0) - y;
    let loss = diff.mapv(|d| d * d).sum() / n;
    let grad_out = diff.mapv(|d| 2.0 * d / n).insert_axis(Axis(1));
    let (grads, _) = critic.backward(&cache, grad_out);
    (loss, grads)
}

/// `−mean Q(s, μ(s))` and its gradient with respect to the actor parameters.
pub fn actor_loss_and_grad(actor: &Mlp, critic: &Mlp, s: ArrayView2<f64>) -> (f64, Grads) {
    let n = s.nrows() as f64;
    let obs_dim = s.ncols();
    let ac = actor.forward_cached(s);
    let cc = critic.forward_cached(join(s, ac.output().view()).view());
    let loss = -cc.output().sum() / n;
    let (_, gx) = critic.backward(&cc, Array2::from_elem((s.nrows(), 1), -1.0 / n));
    let ga = gx.slice(s![.., obs_dim..]).to_owned();
    let (grads, _) = actor.backward(&ac, ga);
    (loss, grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, cfg: &TrainConfig, rng: &mut R) -> Self {
        let h = cfg.hidden;
        let actor = Mlp::new(&[obs_dim, h, h, act_dim], Activation::Relu, Activation::Tanh, LAST_LAYER_SCALE, rng);
        let critic = Mlp::new(
            &[obs_dim + act_dim, h, h, 1],
            Activation::Relu,
            Activation::Linear,
            LAST_LAYER_SCALE,
            rng,
        );
        Self {
            actor_opt: Optimizer::new(cfg.optimizer, cfg.lr_actor, &actor),
            critic_opt: Optimizer::new(cfg.optimizer, cfg.lr_critic, &critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
        }
    }

    pub fn act(&self, obs: &[f64]) -> Vec<f64> {
        self.actor.forward_one(obs)
    }

    /// One critic step, one actor step, then Polyak-averaged targets. Returns a
    /// diagnostic message if a loss or gradient is not finite.
    pub fn update(&mut self, b: &Batch, cfg: &TrainConfig) -> Result<UpdateStats, String> {
        let y = ddpg_targets(&self.actor_target, &self.critic_target, b, cfg.gamma);
        let (critic_loss, gc) = critic_loss_and_grad(&self.critic, b.s.view(), b.a.view(), &y);
        if !critic_loss.is_finite() || !gc.is_finite() {
            return Err(format!("critic loss {critic_loss}"));
        }
        self.critic_opt.step(&mut self.critic, &gc);
        let (actor_loss, ga) = actor_loss_and_grad(&self.actor, &self.critic, b.s.view());
        if !actor_loss.is_finite() || !ga.is_finite() {
            return Err(format!("actor loss {actor_loss} (critic loss {critic_loss})"));
        }
        self.actor_opt.step(&mut self.actor, &ga);
        self.critic_target.soft_update(&self.critic, cfg.tau);
        self.actor_target.soft_update(&self.actor, cfg.tau);
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }
}
