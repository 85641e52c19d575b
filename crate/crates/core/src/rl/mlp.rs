//! Fully connected networks with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Linear => {}
        }
    }

    /// Multiplies `g` by the derivative, expressed through the activation output.
    fn backprop(self, g: &mut Array2<f64>, out: &Array2<f64>) {
        match self {
            Activation::Relu => g.zip_mut_with(out, |g, &o| {
                if o <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => g.zip_mut_with(out, |g, &o| *g *= 1.0 - o * o),
            Activation::Linear => {}
        }
    }
}

/// Affine layer `y = act(x·W + b)` with `W` stored input-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub act: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Parameter gradients, one `(dW, db)` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Grads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().chain(b.iter()).all(|v| v.is_finite()))
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }
}

/// Layer inputs and outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("network has at least one layer")
    }
}

impl Mlp {
    /// Layer widths `sizes` (input first). Hidden layers use `hidden`, the last layer
    /// `output`. Weights are uniform in ±1/√fan_in; the last layer in ±`last_scale`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        last_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let last = l + 1 == n;
                let bound = if last { last_scale } else { 1.0 / (fan_in as f64).sqrt() };
                let w = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound));
                let b = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-bound..=bound));
                Dense {
                    w,
                    b,
                    act: if last { output } else { hidden },
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.ncols())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.w.ncols()));
        s
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.act).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Batch forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.to_owned();
        for layer in &self.layers {
            let mut z = h.dot(&layer.w) + &layer.b;
            layer.act.apply(&mut z);
            h = z;
        }
        h
    }

    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        self.forward(view).into_raw_vec_and_offset().0
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Cache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for layer in &self.layers {
            let mut z = h.dot(&layer.w) + &layer.b;
            layer.act.apply(&mut z);
            inputs.push(h);
            h = z;
            outputs.push(h.clone());
        }
        Cache { inputs, outputs }
    }

    /// Given ∂L/∂output, returns parameter gradients and ∂L/∂input.
    pub fn backward(&self, cache: &Cache, grad_out: Array2<f64>) -> (Grads, Array2<f64>) {
        let mut g = grad_out;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            layer.act.backprop(&mut g, &cache.outputs[l]);
            let dw = cache.inputs[l].t().dot(&g);
            let db = g.sum_axis(Axis(0));
            g = g.dot(&layer.w.t());
            layers.push((dw, db));
        }
        layers.reverse();
        (Grads { layers }, g)
    }

    pub fn zero_grads(&self) -> Grads {
        Grads {
            layers: self
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.len())))
                .collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Contract(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
        Ok(())
    }

    /// Rebuilds a network from its layer widths, activations and flat parameters.
    pub fn from_flat(sizes: &[usize], activations: &[Activation], params: &[f64]) -> Result<Self> {
        if sizes.len() < 2 || activations.len() + 1 != sizes.len() {
            return Err(Error::Contract(format!(
                "{} layer sizes do not match {} activations",
                sizes.len(),
                activations.len()
            )));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Dense {
                w: Array2::zeros((w[0], w[1])),
                b: Array1::zeros(w[1]),
                act,
            })
            .collect();
        let mut net = Self { layers };
        net.set_flat(params)?;
        Ok(net)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    /// Polyak averaging `self = τ·online + (1 − τ)·self`.
    pub fn soft_update(&mut self, online: &Mlp, tau: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            t.w.zip_mut_with(&o.w, |t, &o| *t = tau * o + (1.0 - tau) * *t);
            t.b.zip_mut_with(&o.b, |t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central-difference check of `analytic` against `loss` over every parameter.
    pub(crate) fn assert_grad_matches(
        params: &[f64],
        analytic: &[f64],
        mut loss: impl FnMut(&[f64]) -> f64,
    ) {
        assert_eq!(params.len(), analytic.len());
        let h = 1e-5;
        let mut p = params.to_vec();
        for i in 0..p.len() {
            let orig = p[i];
            p[i] = orig + h;
            let up = loss(&p);
            p[i] = orig - h;
            let down = loss(&p);
            p[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[i];
            let tol = 1e-4 * numeric.abs().max(a.abs()) + 1e-9;
            assert!((numeric - a).abs() <= tol, "param {i}: analytic {a} numeric {numeric}");
        }
    }

    pub(crate) fn random_input(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for out_act in [Activation::Linear, Activation::Tanh] {
            let net = Mlp::new(&[5, 7, 6, 2], Activation::Relu, out_act, 0.5, &mut rng);
            let x = random_input(4, 5, &mut rng);
            let target = random_input(4, 2, &mut rng);
            let loss_of = |n: &Mlp| -> f64 {
                let y = n.forward(x.view());
                (&y - &target).mapv(|d| d * d).sum() / 4.0
            };
            let cache = net.forward_cached(x.view());
            let grad_out = (cache.output() - &target) * (2.0 / 4.0);
            let (grads, _) = net.backward(&cache, grad_out);
            let mut probe = net.clone();
            assert_grad_matches(&net.to_flat(), &grads.flatten(), |p| {
                probe.set_flat(p).unwrap();
                loss_of(&probe)
            });
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::new(&[3, 8, 8, 1], Activation::Relu, Activation::Linear, 0.5, &mut rng);
        let x = random_input(3, 3, &mut rng);
        let cache = net.forward_cached(x.view());
        let (_, gx) = net.backward(&cache, Array2::ones((3, 1)));
        let flat: Vec<f64> = x.iter().copied().collect();
        assert_grad_matches(&flat, &gx.iter().copied().collect::<Vec<_>>(), |p| {
            let xi = Array2::from_shape_vec((3, 3), p.to_vec()).unwrap();
            net.forward(xi.view()).sum()
        });
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[4, 16, 16, 2], Activation::Relu, Activation::Tanh, 3e-3, &mut rng);
        let back = Mlp::from_flat(&net.sizes(), &net.activations(), &net.to_flat()).unwrap();
        assert_eq!(net, back);
        assert_eq!(net.param_count(), 4 * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
        assert!(Mlp::from_flat(&net.sizes(), &net.activations(), &[0.0; 3]).is_err());
    }

    #[test]
    fn polyak_identity_and_mix() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let online = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Linear, 0.1, &mut rng);
        let mut target = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Linear, 0.1, &mut rng);
        let before = target.to_flat();
        let mut copy = target.clone();
        copy.soft_update(&online, 1.0);
        assert_eq!(copy.to_flat(), online.to_flat());
        target.soft_update(&online, 0.25);
        for ((t, o), b) in target.to_flat().iter().zip(online.to_flat()).zip(before) {
            assert_eq!(*t, 0.25 * o + 0.75 * b);
        }
    }

    #[test]
    fn last_layer_init_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::new(&[10, 32, 32, 2], Activation::Relu, Activation::Tanh, 3e-3, &mut rng);
        let last = net.layers.last().unwrap();
        assert!(last.w.iter().all(|w| w.abs() <= 3e-3));
        let first = &net.layers[0];
        assert!(first.w.iter().all(|w| w.abs() <= 1.0 / 10f64.sqrt()));
    }
}
