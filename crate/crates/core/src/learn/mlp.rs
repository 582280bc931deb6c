//! Small fully connected regression networks.
//!
//! Architecture: input, tanh hidden layers (64 and 32 by default), one
//! linear output. Training is plain mini-batch Adam on mean squared
//! error with early stopping on a validation set; the best-epoch weights
//! are restored at the end. Inputs and labels are z-scored by a
//! [`Normalizer`] computed on the training split, which ships with the
//! model so inference sees the same scaling.
//!
//! The backward pass is exposed ([`Network::loss_and_grads`]) so tests
//! can confirm the analytic gradients against central differences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::MlpConfig;
use crate::error::{Error, Result};
use crate::seeding::mix_seed;

/// Per-feature z-scoring, plus label scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub label_mean: f64,
    pub label_std: f64,
}

impl Normalizer {
    /// Fit on training rows. Constant features get unit scale so they
    /// normalise to zero instead of dividing by zero.
    pub fn fit(rows: &[Vec<f64>], labels: &[f64]) -> Result<Normalizer> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(Error::Dataset("normalizer needs non-empty rows".into()));
        }
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let label_mean = labels.iter().sum::<f64>() / n;
        let label_var = labels.iter().map(|y| (y - label_mean).powi(2)).sum::<f64>() / n;
        let label_std = if label_var.sqrt() > 1e-12 {
            label_var.sqrt()
        } else {
            1.0
        };
        Ok(Normalizer {
            mean,
            std,
            label_mean,
            label_std,
        })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    pub fn scale_label(&self, y: f64) -> f64 {
        (y - self.label_mean) / self.label_std
    }

    pub fn unscale_label(&self, y: f64) -> f64 {
        y * self.label_std + self.label_mean
    }
}

/// One dense layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// A feed-forward network: tanh on all layers except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Per-layer parameter gradients, same shapes as the layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
}

impl Network {
    /// Xavier-uniform initialisation for `dims = [in, h1, ..., 1]`.
    pub fn init(dims: &[usize], seed: u64) -> Result<Network> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!("bad network dims {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            layers.push(Layer {
                w,
                b: vec![0.0; fan_out],
                in_dim: fan_in,
                out_dim: fan_out,
            });
        }
        Ok(Network { layers })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    /// Forward pass on one (normalised) row.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if li != last {
                for v in &mut next {
                    *v = v.tanh();
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Mean squared error over a batch plus its parameter gradients.
    pub fn loss_and_grads(&self, rows: &[&[f64]], targets: &[f64]) -> (f64, Gradients) {
        let last = self.layers.len() - 1;
        let inv_n = 1.0 / rows.len() as f64;
        let mut dw: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let mut db: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();
        let mut loss = 0.0;

        // Activations per layer for one sample (post-nonlinearity).
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        for (row, &target) in rows.iter().zip(targets) {
            acts.clear();
            acts.push(row.to_vec());
            for (li, layer) in self.layers.iter().enumerate() {
                let mut out = Vec::new();
                layer.forward(acts.last().expect("input pushed"), &mut out);
                if li != last {
                    for v in &mut out {
                        *v = v.tanh();
                    }
                }
                acts.push(out);
            }
            let pred = acts.last().expect("output layer")[0];
            let err = pred - target;
            loss += err * err * inv_n;

            // Backward: d(MSE)/d(pred) = 2 (pred - target) / n.
            let mut delta = vec![2.0 * err * inv_n];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                for o in 0..layer.out_dim {
                    let g = delta[o];
                    db[li][o] += g;
                    let wrow = &mut dw[li][o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (wslot, xi) in wrow.iter_mut().zip(input) {
                        *wslot += g * xi;
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let g = delta[o];
                    let wrow = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, wi) in prev.iter_mut().zip(wrow) {
                        *p += g * wi;
                    }
                }
                // Through the tanh of the previous layer: a' = 1 - a^2.
                for (p, a) in prev.iter_mut().zip(&acts[li]) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        (loss, Gradients { dw, db })
    }
}

/// Adam state per parameter tensor.
struct Adam {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    fn new(net: &Network) -> Adam {
        Adam {
            m_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            v_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            m_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            v_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network, g: &Gradients, lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t as i32);
        let c2 = 1.0 - B2.powi(self.t as i32);
        for (li, layer) in net.layers.iter_mut().enumerate() {
            for (i, w) in layer.w.iter_mut().enumerate() {
                let grad = g.dw[li][i];
                let m = &mut self.m_w[li][i];
                let v = &mut self.v_w[li][i];
                *m = B1 * *m + (1.0 - B1) * grad;
                *v = B2 * *v + (1.0 - B2) * grad * grad;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            }
            for (i, b) in layer.b.iter_mut().enumerate() {
                let grad = g.db[li][i];
                let m = &mut self.m_b[li][i];
                let v = &mut self.v_b[li][i];
                *m = B1 * *m + (1.0 - B1) * grad;
                *v = B2 * *v + (1.0 - B2) * grad * grad;
                *b -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            }
        }
    }
}

/// A trained network plus its training record.
#[derive(Debug, Clone)]
pub struct TrainedMlp {
    pub network: Network,
    /// Validation MSE per epoch (normalised label units).
    pub val_curve: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Train one network on pre-normalised data.
///
/// `seed` drives both initialisation and batch shuffling. Labels and
/// rows must already be in normaliser units. Non-finite loss aborts with
/// a divergence error.
pub fn train_mlp(
    train_rows: &[Vec<f64>],
    train_labels: &[f64],
    val_rows: &[Vec<f64>],
    val_labels: &[f64],
    cfg: &MlpConfig,
    seed: u64,
) -> Result<TrainedMlp> {
    if train_rows.is_empty() || train_rows.len() != train_labels.len() {
        return Err(Error::Dataset("mlp: bad training shapes".into()));
    }
    if val_rows.is_empty() || val_rows.len() != val_labels.len() {
        return Err(Error::Dataset("mlp: bad validation shapes".into()));
    }
    let d = train_rows[0].len();
    let mut dims = vec![d];
    dims.extend(cfg.hidden.iter().copied());
    dims.push(1);
    let mut net = Network::init(&dims, mix_seed(seed, 0xA11))?;
    let mut adam = Adam::new(&net);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xB22));

    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut best = f64::INFINITY;
    let mut best_net = net.clone();
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;
    let mut val_curve = Vec::with_capacity(cfg.max_epochs);
    let mut stopped_early = false;

    let mut batch_rows: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);
    let mut batch_targets: Vec<f64> = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.max_epochs {
        // Fisher-Yates shuffle.
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            batch_rows.clear();
            batch_targets.clear();
            for &i in chunk {
                batch_rows.push(&train_rows[i]);
                batch_targets.push(train_labels[i]);
            }
            let (loss, grads) = net.loss_and_grads(&batch_rows, &batch_targets);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    seed,
                    reason: format!("non-finite loss at epoch {epoch}"),
                });
            }
            adam.step(&mut net, &grads, cfg.learning_rate);
        }

        let val_mse = {
            let mut s = 0.0;
            for (r, y) in val_rows.iter().zip(val_labels) {
                let e = net.predict(r) - y;
                s += e * e;
            }
            s / val_rows.len() as f64
        };
        if !val_mse.is_finite() {
            return Err(Error::TrainingDiverged {
                seed,
                reason: format!("non-finite validation loss at epoch {epoch}"),
            });
        }
        val_curve.push(val_mse);
        if val_mse < best {
            best = val_mse;
            best_net = net.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(TrainedMlp {
        network: best_net,
        val_curve,
        best_epoch,
        stopped_early,
    })
}
