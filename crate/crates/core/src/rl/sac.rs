//! Soft actor-critic with twin critics and a tanh-squashed Gaussian policy.
//!
//! The actor emits `[μ, ρ]` per action dimension; the log standard deviation is
//! `LOG_STD_MIN + ½(LOG_STD_MAX − LOG_STD_MIN)(tanh ρ + 1)`. Actions are
//! `a = tanh(μ + σ ε)` with `ε ~ N(0, I)` supplied by the caller, so every loss here
//! is a deterministic function of the parameters.

use std::f64::consts::PI;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use super::ddpg::{critic_loss_and_grad, join, UpdateStats, LAST_LAYER_SCALE};
use super::mlp::{Activation, Cache, Grads, Mlp};
use super::optim::Optimizer;
use super::replay::Batch;
use super::train::TrainConfig;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Keeps the squashing correction finite at |a| → 1.
const SQUASH_EPS: f64 = 1e-6;

/// Reparameterised policy sample for a batch.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub action: Array2<f64>,
    pub log_prob: Array1<f64>,
    sigma: Array2<f64>,
    raw_log_std: Array2<f64>,
}

/// Squashes actor outputs `out` (n × 2d) with noise `eps` (n × d).
pub fn squash(out: &Array2<f64>, eps: &Array2<f64>) -> PolicySample {
    let d = eps.ncols();
    let mu = out.slice(s![.., ..d]);
    let raw_log_std = out.slice(s![.., d..]).to_owned();
    let log_std = raw_log_std.mapv(|r| LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (r.tanh() + 1.0));
    let sigma = log_std.mapv(f64::exp);
    let mut action = Array2::zeros(eps.raw_dim());
    Zip::from(&mut action)
        .and(&mu)
        .and(&sigma)
        .and(eps)
        .for_each(|a, &m, &sg, &e| *a = (m + sg * e).tanh());
    let mut terms = Array2::zeros(eps.raw_dim());
    Zip::from(&mut terms)
        .and(eps)
        .and(&log_std)
        .and(&action)
        .for_each(|t, &e, &ls, &a| *t = -0.5 * e * e - ls - 0.5 * (2.0 * PI).ln() - (1.0 - a * a + SQUASH_EPS).ln());
    PolicySample {
        action,
        log_prob: terms.sum_axis(Axis(1)),
        sigma,
        raw_log_std,
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Soft targets `y = r + γ(1 − done)(min Q′ᵢ(s′, a′) − α log π(a′|s′))`.
pub fn sac_targets(actor: &Mlp, q1_t: &Mlp, q2_t: &Mlp, b: &Batch, gamma: f64, alpha: f64, eps_next: &Array2<f64>) -> Array1<f64> {
    let next = squash(&actor.forward(b.s_next.view()), eps_next);
    let x = join(b.s_next.view(), next.action.view());
    let q1 = q1_t.forward(x.view());
    let q2 = q2_t.forward(x.view());
    Array1::from_shape_fn(b.len(), |i| {
        let soft = q1[[i, 0]].min(q2[[i, 0]]) - alpha * next.log_prob[i];
        b.r[i] + gamma * (1.0 - b.done[i]) * soft
    })
}

/// `mean(α log π(a|s) − min(Q₁, Q₂)(s, a))` and its actor gradient.
pub fn sac_actor_loss_and_grad(
    actor: &Mlp,
    q1: &Mlp,
    q2: &Mlp,
    s: ArrayView2<f64>,
    eps: &Array2<f64>,
    alpha: f64,
) -> (f64, Grads) {
    let n = s.nrows();
    let nf = n as f64;
    let obs_dim = s.ncols();
    let ac: Cache = actor.forward_cached(s);
    let p = squash(ac.output(), eps);
    let x = join(s, p.action.view());
    let c1 = q1.forward_cached(x.view());
    let c2 = q2.forward_cached(x.view());
    let (o1, o2) = (c1.output().column(0), c2.output().column(0));
    let first: Vec<bool> = (0..n).map(|i| o1[i] <= o2[i]).collect();
    let min_q = Array1::from_shape_fn(n, |i| if first[i] { o1[i] } else { o2[i] });
    let loss = (alpha * &p.log_prob - &min_q).sum() / nf;

    let g1 = Array2::from_shape_fn((n, 1), |(i, _)| if first[i] { -1.0 / nf } else { 0.0 });
    let g2 = Array2::from_shape_fn((n, 1), |(i, _)| if first[i] { 0.0 } else { -1.0 / nf });
    let (_, gx1) = q1.backward(&c1, g1);
    let (_, gx2) = q2.backward(&c2, g2);
    let dq_da = &gx1.slice(s![.., obs_dim..]) + &gx2.slice(s![.., obs_dim..]);

    let scale = 0.5 * (LOG_STD_MAX - LOG_STD_MIN);
    let mut d_mu = Array2::zeros(eps.raw_dim());
    Zip::from(&mut d_mu)
        .and(&dq_da)
        .and(&p.action)
        .for_each(|g, &dq, &a| {
            let one_minus = 1.0 - a * a;
            *g = dq * one_minus + alpha / nf * 2.0 * a * one_minus / (one_minus + SQUASH_EPS);
        });
    let mut d_raw_ls = Array2::zeros(eps.raw_dim());
    Zip::from(&mut d_raw_ls)
        .and(&d_mu)
        .and(&p.sigma)
        .and(eps)
        .and(&p.raw_log_std)
        .for_each(|g, &du, &sg, &e, &r| {
            let d_ls = du * sg * e - alpha / nf;
            let t = r.tanh();
            *g = d_ls * scale * (1.0 - t * t);
        });
    let grad_out = concatenate(Axis(1), &[d_mu.view(), d_raw_ls.view()]).expect("same rows");
    let (grads, _) = actor.backward(&ac, grad_out);
    (loss, grads)
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub actor: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    actor_opt: Optimizer,
    q1_opt: Optimizer,
    q2_opt: Optimizer,
    act_dim: usize,
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, cfg: &TrainConfig, rng: &mut R) -> Self {
        let h = cfg.hidden;
        let actor = Mlp::new(
            &[obs_dim, h, h, 2 * act_dim],
            Activation::Relu,
            Activation::Linear,
            LAST_LAYER_SCALE,
            rng,
        );
        let critic_sizes = [obs_dim + act_dim, h, h, 1];
        let q1 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Linear, LAST_LAYER_SCALE, rng);
        let q2 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Linear, LAST_LAYER_SCALE, rng);
        Self {
            actor_opt: Optimizer::new(cfg.optimizer, cfg.lr_actor, &actor),
            q1_opt: Optimizer::new(cfg.optimizer, cfg.lr_critic, &q1),
            q2_opt: Optimizer::new(cfg.optimizer, cfg.lr_critic, &q2),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            act_dim,
        }
    }

    /// Mean action `tanh(μ)`.
    pub fn act(&self, obs: &[f64]) -> Vec<f64> {
        mean_action(&self.actor, obs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Vec<f64> {
        let out = Array2::from_shape_vec((1, 2 * self.act_dim), self.actor.forward_one(obs)).expect("actor width");
        let eps = standard_normal(1, self.act_dim, rng);
        squash(&out, &eps).action.into_raw_vec_and_offset().0
    }

    pub fn update<R: Rng + ?Sized>(&mut self, b: &Batch, cfg: &TrainConfig, rng: &mut R) -> Result<UpdateStats, String> {
        let eps_next = standard_normal(b.len(), self.act_dim, rng);
        let y = sac_targets(&self.actor, &self.q1_target, &self.q2_target, b, cfg.gamma, cfg.alpha, &eps_next);
        let (l1, g1) = critic_loss_and_grad(&self.q1, b.s.view(), b.a.view(), &y);
        let (l2, g2) = critic_loss_and_grad(&self.q2, b.s.view(), b.a.view(), &y);
        if !(l1.is_finite() && l2.is_finite() && g1.is_finite() && g2.is_finite()) {
            return Err(format!("critic losses {l1}, {l2}"));
        }
        self.q1_opt.step(&mut self.q1, &g1);
        self.q2_opt.step(&mut self.q2, &g2);
        let eps = standard_normal(b.len(), self.act_dim, rng);
        let (actor_loss, ga) = sac_actor_loss_and_grad(&self.actor, &self.q1, &self.q2, b.s.view(), &eps, cfg.alpha);
        if !actor_loss.is_finite() || !ga.is_finite() {
            return Err(format!("actor loss {actor_loss} (critic losses {l1}, {l2})"));
        }
        self.actor_opt.step(&mut self.actor, &ga);
        self.q1_target.soft_update(&self.q1, cfg.tau);
        self.q2_target.soft_update(&self.q2, cfg.tau);
        Ok(UpdateStats {
            critic_loss: 0.5 * (l1 + l2),
            actor_loss,
        })
    }
}

/// Deterministic action of a squashed-Gaussian actor.
pub fn mean_action(actor: &Mlp, obs: &[f64]) -> Vec<f64> {
    let out = actor.forward_one(obs);
    let d = out.len() / 2;
    out[..d].iter().map(|m| m.tanh()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::ddpg::actor_loss_and_grad;
    use crate::rl::mlp::tests::{assert_grad_matches, random_input};
    use crate::rl::replay::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> TrainConfig {
        TrainConfig {
            hidden: 8,
            ..TrainConfig::default()
        }
    }

    fn agent(rng: &mut ChaCha8Rng) -> SacAgent {
        let mut a = SacAgent::new(4, 2, &cfg(), rng);
        for net in [&mut a.actor, &mut a.q1, &mut a.q2] {
            net.layers.last_mut().unwrap().w.mapv_inplace(|w| w * 200.0);
        }
        a
    }

    #[test]
    fn log_prob_matches_direct_density() {
        let out = Array2::from_shape_vec((1, 2), vec![0.3, -0.4]).unwrap();
        let eps = Array2::from_shape_vec((1, 1), vec![0.7]).unwrap();
        let p = squash(&out, &eps);
        let ls = LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * ((-0.4f64).tanh() + 1.0);
        let sigma = ls.exp();
        let u = 0.3 + sigma * 0.7;
        let gauss = (-(0.7f64 * 0.7) / 2.0).exp() / (sigma * (2.0 * PI).sqrt());
        let a = u.tanh();
        let want = (gauss / (1.0 - a * a + SQUASH_EPS)).ln();
        assert!((p.log_prob[0] - want).abs() < 1e-12);
        assert_eq!(p.action[[0, 0]], a);
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = agent(&mut rng);
        let s = random_input(4, 4, &mut rng);
        let eps = standard_normal(4, 2, &mut rng);
        let (_, g) = sac_actor_loss_and_grad(&a.actor, &a.q1, &a.q2, s.view(), &eps, 0.2);
        let mut probe = a.actor.clone();
        assert_grad_matches(&a.actor.to_flat(), &g.flatten(), |p| {
            probe.set_flat(p).unwrap();
            sac_actor_loss_and_grad(&probe, &a.q1, &a.q2, s.view(), &eps, 0.2).0
        });
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = agent(&mut rng);
        let ts: Vec<Transition> = (0..4)
            .map(|_| Transition {
                s: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                a: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                r: rng.random_range(-1.0..1.0),
                s_next: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                done: false,
            })
            .collect();
        let b = Batch::from_transitions(&ts);
        let eps = standard_normal(4, 2, &mut rng);
        let y = sac_targets(&a.actor, &a.q1_target, &a.q2_target, &b, 0.99, 0.2, &eps);
        let (_, g) = critic_loss_and_grad(&a.q2, b.s.view(), b.a.view(), &y);
        let mut probe = a.q2.clone();
        assert_grad_matches(&a.q2.to_flat(), &g.flatten(), |p| {
            probe.set_flat(p).unwrap();
            critic_loss_and_grad(&probe, b.s.view(), b.a.view(), &y).0
        });
    }

    #[test]
    fn twin_target_uses_smaller_critic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut a = agent(&mut rng);
        for (net, c) in [(&mut a.q1_target, 1.0), (&mut a.q2_target, 2.0)] {
            for l in net.layers.iter_mut() {
                l.w.fill(0.0);
                l.b.fill(0.0);
            }
            net.layers.last_mut().unwrap().b.fill(c);
        }
        let t = Transition {
            s: vec![0.1; 4],
            a: vec![0.0; 2],
            r: 0.0,
            s_next: vec![0.2; 4],
            done: false,
        };
        let b = Batch::from_transitions([&t, &t]);
        let eps = standard_normal(2, 2, &mut rng);
        let y = sac_targets(&a.actor, &a.q1_target, &a.q2_target, &b, 1.0, 0.0, &eps);
        assert_eq!(y, Array1::from_elem(2, 1.0));
    }

    #[test]
    fn zero_temperature_noiseless_limit_is_q_ascent() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = agent(&mut rng);
        let s = random_input(6, 4, &mut rng);
        let eps = Array2::zeros((6, 2));
        let (loss, g) = sac_actor_loss_and_grad(&a.actor, &a.q1, &a.q1, s.view(), &eps, 0.0);

        // the same objective written as a deterministic actor: tanh of the mean head
        let mut det = a.actor.clone();
        let last = det.layers.last_mut().unwrap();
        last.w = last.w.slice(s![.., ..2]).to_owned();
        last.b = last.b.slice(s![..2]).to_owned();
        last.act = Activation::Tanh;
        let (want_loss, want_g) = actor_loss_and_grad(&det, &a.q1, s.view());
        assert!((loss - want_loss).abs() < 1e-12);

        let n = a.actor.layers.len();
        for l in 0..n - 1 {
            let diff = (&g.layers[l].0 - &want_g.layers[l].0).mapv(f64::abs);
            assert!(diff.iter().all(|d| *d < 1e-12));
        }
        let (gw, gb) = &g.layers[n - 1];
        assert!((&gw.slice(s![.., ..2]) - &want_g.layers[n - 1].0).iter().all(|d| d.abs() < 1e-12));
        assert!(gw.slice(s![.., 2..]).iter().all(|v| *v == 0.0));
        assert!(gb.slice(s![2..]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn update_changes_parameters_and_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let c = cfg();
        let mut a = SacAgent::new(4, 2, &c, &mut rng);
        let t = Transition {
            s: vec![0.1, 0.2, 0.3, 0.4],
            a: vec![0.5, -0.5],
            r: 1.0,
            s_next: vec![0.2, 0.2, 0.3, 0.4],
            done: false,
        };
        let b = Batch::from_transitions([&t, &t, &t]);
        let before = a.actor.clone();
        let stats = a.update(&b, &c, &mut rng).unwrap();
        assert!(stats.critic_loss.is_finite() && stats.actor_loss.is_finite());
        assert_ne!(a.actor, before);
        let sample = a.sample(&t.s, &mut rng);
        assert!(sample.iter().all(|v| v.abs() < 1.0));
    }
}
