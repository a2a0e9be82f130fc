// SPDX-License-Identifier: MIT OR Apache-2.0

//! One-hidden-layer tanh network trained by mini-batch gradient descent on
//! the loss `mean(½(ŷ - y)²)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const BATCH_SIZE: usize = 32;

/// Parameters are stored flat: `W1` (hidden × inputs, row-major), `b1`,
/// `w2`, then the scalar `b2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn n_params(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + 2 * hidden + 1
    }

    /// Gaussian weights scaled by `1/√fan_in`, zero biases.
    pub fn init(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut params = vec![0.0; Self::n_params(inputs, hidden)];
        let s1 = 1.0 / (inputs as f64).sqrt();
        for p in &mut params[..hidden * inputs] {
            *p = s1 * rng.sample::<f64, _>(StandardNormal);
        }
        let s2 = 1.0 / (hidden as f64).sqrt();
        let w2 = hidden * inputs + hidden;
        for p in &mut params[w2..w2 + hidden] {
            *p = s2 * rng.sample::<f64, _>(StandardNormal);
        }
        Self { inputs, hidden, params }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden;
        (b1, w2, b2)
    }

    fn hidden_activations(&self, x: &[f64], out: &mut [f64]) {
        let (b1, _, _) = self.offsets();
        for (j, a) in out.iter_mut().enumerate() {
            let row = &self.params[j * self.inputs..(j + 1) * self.inputs];
            let pre = self.params[b1 + j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *a = pre.tanh();
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let (_, w2, b2) = self.offsets();
        let mut h = vec![0.0; self.hidden];
        self.hidden_activations(x, &mut h);
        self.params[b2] + h.iter().zip(&self.params[w2..w2 + self.hidden]).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Loss and its gradient over a batch.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut h = vec![0.0; self.hidden];
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            self.hidden_activations(x, &mut h);
            let pred = self.params[b2]
                + h.iter().zip(&self.params[w2..w2 + self.hidden]).map(|(a, w)| a * w).sum::<f64>();
            let err = pred - y;
            loss += 0.5 * err * err * scale;
            let d_out = err * scale;
            grad[b2] += d_out;
            for j in 0..self.hidden {
                grad[w2 + j] += d_out * h[j];
                let d_pre = d_out * self.params[w2 + j] * (1.0 - h[j] * h[j]);
                grad[b1 + j] += d_pre;
                let row = &mut grad[j * self.inputs..(j + 1) * self.inputs];
                for (g, v) in row.iter_mut().zip(x.iter()) {
                    *g += d_pre * v;
                }
            }
        }
        (loss, grad)
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[f64]) -> f64 {
        let scale = 1.0 / xs.len() as f64;
        xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = self.forward(x) - y;
                0.5 * e * e * scale
            })
            .sum()
    }

    /// Shuffled mini-batch gradient descent.
    pub fn train(&mut self, xs: &[Vec<f64>], ys: &[f64], epochs: usize, learning_rate: f64, rng: &mut impl Rng) {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut batch_x: Vec<&[f64]> = Vec::with_capacity(BATCH_SIZE);
        let mut batch_y = Vec::with_capacity(BATCH_SIZE);
        for _ in 0..epochs {
            order.shuffle(rng);
            for chunk in order.chunks(BATCH_SIZE) {
                batch_x.clear();
                batch_y.clear();
                for &i in chunk {
                    batch_x.push(&xs[i]);
                    batch_y.push(ys[i]);
                }
                let (_, grad) = self.loss_and_grad(&batch_x, &batch_y);
                for (p, g) in self.params.iter_mut().zip(&grad) {
                    *p -= learning_rate * g;
                }
            }
        }
    }
}

/// Builds and trains a network from a seed.
pub fn fit(
    xs: &[Vec<f64>],
    ys: &[f64],
    hidden: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Mlp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = xs.first().map_or(0, Vec::len);
    let mut net = Mlp::init(inputs, hidden, &mut rng);
    net.train(xs, ys, epochs, learning_rate, &mut rng);
    net
}
