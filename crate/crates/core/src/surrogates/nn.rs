//! Fully connected sigmoid network trained with Adam on mini-batches.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weight of Σ‖W‖² in the loss; biases are not penalised.
    pub l2: f64,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            hidden: vec![32; 5],
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 1500,
            l2: 1e-7,
        }
    }
}

impl NnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::validation("hidden", "layer widths must be >= 1"));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::validation("nn", "batch_size and epochs must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.l2 >= 0.0) {
            return Err(Error::validation("nn", "learning_rate must be > 0 and l2 >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// fan_in × fan_out.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Sigmoid hidden layers and a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_in: usize, hidden: &[usize], n_out: usize, rng: &mut impl Rng) -> Mlp {
        let widths: Vec<usize> = std::iter::once(n_in).chain(hidden.iter().copied()).chain([n_out]).collect();
        let layers = widths
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Dense {
                    w: Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-limit..limit)),
                    b: Array1::zeros(w[1]),
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.ncols())
    }

    /// Activations of every layer, input first.
    fn forward(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&l.w) + &l.b;
            if i < last {
                z.mapv_inplace(sigmoid);
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x).pop().unwrap()
    }

    /// Mean squared error over all outputs plus `l2`·Σ‖W‖², with its gradient.
    pub fn loss_and_gradient(&self, x: ArrayView2<f64>, y: ArrayView2<f64>, l2: f64) -> (f64, Vec<Dense>) {
        let acts = self.forward(x);
        let out = acts.last().unwrap();
        let diff = out - &y;
        let count = diff.len() as f64;
        let penalty: f64 = self.layers.iter().map(|l| l.w.iter().map(|v| v * v).sum::<f64>()).sum();
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / count + l2 * penalty;

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = diff * (2.0 / count);
        for (i, l) in self.layers.iter().enumerate().rev() {
            let gw = acts[i].t().dot(&delta) + &(&l.w * (2.0 * l2));
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let a = &acts[i];
                delta = delta.dot(&l.w.t()) * &a.mapv(|v| v * (1.0 - v));
            }
            grads.push(Dense { w: gw, b: gb });
        }
        grads.reverse();
        (loss, grads)
    }
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(net: &Mlp) -> Self {
        let zeros = || {
            net.layers
                .iter()
                .map(|l| Dense {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect()
        };
        Adam { m: zeros(), v: zeros(), t: 0 }
    }

    fn step(&mut self, net: &mut Mlp, grads: &[Dense], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        };
        for (((l, g), m), v) in net.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(&mut l.w).and(&g.w).and(&mut m.w).and(&mut v.w).for_each(|p, &g, m, v| update(p, m, v, g));
            ndarray::Zip::from(&mut l.b).and(&g.b).and(&mut m.b).and(&mut v.b).for_each(|p, &g, m, v| update(p, m, v, g));
        }
    }
}

/// Trains on already scaled data. Returns the network and the mean batch loss of each epoch.
pub fn train_mlp(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &NnConfig, seed: u64) -> Result<(Mlp, Vec<f64>)> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 || n != y.nrows() {
        return Err(Error::validation("training data", format!("{n} input rows, {} target rows", y.nrows())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::init(x.ncols(), &cfg.hidden, y.ncols(), &mut rng);
    let mut adam = Adam::new(&net);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), chunk);
            let yb = y.select(Axis(0), chunk);
            let (loss, grads) = net.loss_and_gradient(xb.view(), yb.view(), cfg.l2);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            adam.step(&mut net, &grads, cfg.learning_rate);
            total += loss;
            batches += 1;
        }
        history.push(total / batches as f64);
    }
    Ok((net, history))
}
