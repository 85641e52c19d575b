//! First-order optimizers operating on [`Mlp`] parameters in place.

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::mlp::{Grads, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Gradient descent with momentum 0.9.
    Momentum,
    /// Adam with β = (0.9, 0.999), ε = 1e-8.
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "momentum" => Ok(Self::Momentum),
            "adam" => Ok(Self::Adam),
            other => Err(crate::Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    t: i32,
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
}

const MOMENTUM: f64 = 0.9;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &Mlp) -> Self {
        let zeros = net.zero_grads().layers;
        Self {
            kind,
            lr,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Descends along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        self.t = self.t.saturating_add(1);
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Momentum => {
                for ((layer, (gw, gb)), (mw, mb)) in net.layers.iter_mut().zip(&grads.layers).zip(&mut self.m) {
                    mw.zip_mut_with(gw, |m, &g| *m = MOMENTUM * *m + g);
                    mb.zip_mut_with(gb, |m, &g| *m = MOMENTUM * *m + g);
                    layer.w.zip_mut_with(mw, |p, &m| *p -= lr * m);
                    layer.b.zip_mut_with(mb, |p, &m| *p -= lr * m);
                }
            }
            OptimizerKind::Adam => {
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                let iter = net
                    .layers
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()));
                for ((layer, (gw, gb)), ((mw, mb), (vw, vb))) in iter {
                    Zip::from(&mut layer.w)
                        .and(gw)
                        .and(mw)
                        .and(vw)
                        .for_each(|p, &g, m, v| adam(p, g, m, v, lr, c1, c2));
                    Zip::from(&mut layer.b)
                        .and(gb)
                        .and(mb)
                        .and(vb)
                        .for_each(|p, &g, m, v| adam(p, g, m, v, lr, c1, c2));
                }
            }
        }
    }
}

fn adam(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, c1: f64, c2: f64) {
    *m = BETA1 * *m + (1.0 - BETA1) * g;
    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
}
