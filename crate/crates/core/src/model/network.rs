use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ModelError, StateFeatures, TrainingSample, CHANNELS};
use crate::game::{GameId, GameState};

/// Architecture dimensions: `hidden_layers` dense ReLU layers of width
/// `hidden_width`, followed by a softmax policy head and a tanh value head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub actions: usize,
}

impl NetShape {
    pub fn for_game<S: GameState>(hidden_width: usize, hidden_layers: usize) -> Self {
        NetShape {
            input: CHANNELS * S::ROWS * S::COLS,
            hidden_width,
            hidden_layers,
            actions: S::NUM_ACTIONS,
        }
    }

    fn dims(&self) -> Vec<(usize, usize)> {
        let mut d = Vec::with_capacity(self.hidden_layers + 2);
        let mut fan_in = self.input;
        for _ in 0..self.hidden_layers {
            d.push((fan_in, self.hidden_width));
            fan_in = self.hidden_width;
        }
        d.push((fan_in, self.actions));
        d.push((fan_in, 1));
        d
    }

    pub fn param_count(&self) -> usize {
        self.dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    // Weight offset; weights are stored input-major: w[i * fan_out + j].
    w: usize,
    b: usize,
}

fn layout(shape: &NetShape) -> Vec<Layer> {
    let mut offset = 0;
    shape
        .dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let l = Layer {
                fan_in,
                fan_out,
                w: offset,
                b: offset + fan_in * fan_out,
            };
            offset += fan_in * fan_out + fan_out;
            l
        })
        .collect()
}

/// Mean loss components over a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub value: f64,
    pub policy: f64,
    pub l2: f64,
}

/// Parameters θ of the policy-value network, stored as one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    game: GameId,
    shape: NetShape,
    layers: Vec<Layer>,
    params: Vec<f64>,
    /// Learning step this snapshot belongs to.
    step: u64,
    /// SGD updates applied so far.
    updates: u64,
}

fn dense(params: &[f64], layer: &Layer, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(&params[layer.b..layer.b + layer.fan_out]);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &params[layer.w + i * layer.fan_out..layer.w + (i + 1) * layer.fan_out];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
}

fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
    // log-sum-exp of the original logits
    max + sum.ln()
}

impl Network {
    /// He-initialised hidden layers; zero policy and value heads, so a fresh
    /// network outputs uniform priors and a value of exactly 0.
    pub fn new<R: Rng + ?Sized>(game: GameId, shape: NetShape, rng: &mut R) -> Result<Self, ModelError> {
        if shape.hidden_layers == 0 || shape.hidden_width == 0 || shape.actions == 0 || shape.input == 0 {
            return Err(ModelError::Shape(format!("degenerate architecture {shape:?}")));
        }
        let layers = layout(&shape);
        let mut params = vec![0.0; shape.param_count()];
        for layer in &layers[..shape.hidden_layers] {
            let std = (2.0 / layer.fan_in as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            for w in &mut params[layer.w..layer.b] {
                *w = normal.sample(rng);
            }
        }
        Ok(Network {
            game,
            shape,
            layers,
            params,
            step: 0,
            updates: 0,
        })
    }

    pub(crate) fn from_parts(
        game: GameId,
        shape: NetShape,
        params: Vec<f64>,
        step: u64,
        updates: u64,
    ) -> Result<Self, ModelError> {
        if params.len() != shape.param_count() {
            return Err(ModelError::Shape(format!(
                "expected {} parameters, found {}",
                shape.param_count(),
                params.len()
            )));
        }
        Ok(Network {
            game,
            shape,
            layers: layout(&shape),
            params,
            step,
            updates,
        })
    }

    pub fn game(&self) -> GameId {
        self.game
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.params.iter().map(|x| x * x).sum()
    }

    fn policy_layer(&self) -> &Layer {
        &self.layers[self.shape.hidden_layers]
    }

    fn value_layer(&self) -> &Layer {
        &self.layers[self.shape.hidden_layers + 1]
    }

    /// Forward pass on a flat feature vector. Writes the softmax policy into
    /// `policy` and returns the tanh value.
    pub(crate) fn forward_raw(&self, x: &[f64], policy: &mut [f64]) -> f64 {
        let mut h = x.to_vec();
        let mut next = Vec::with_capacity(self.shape.hidden_width);
        for layer in &self.layers[..self.shape.hidden_layers] {
            dense(&self.params, layer, &h, &mut next);
            next.iter_mut().for_each(|v| *v = v.max(0.0));
            std::mem::swap(&mut h, &mut next);
        }
        dense(&self.params, self.policy_layer(), &h, &mut next);
        softmax_in_place(&mut next);
        policy.copy_from_slice(&next);
        dense(&self.params, self.value_layer(), &h, &mut next);
        next[0].tanh()
    }

    fn check_input(&self, features: &StateFeatures) -> Result<(), ModelError> {
        if features.len() != self.shape.input {
            return Err(ModelError::Shape(format!(
                "network expects {} inputs, features have {} ({:?})",
                self.shape.input,
                features.len(),
                features.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, features: &StateFeatures) -> Result<(Vec<f64>, f64), ModelError> {
        self.check_input(features)?;
        let mut p = vec![0.0; self.shape.actions];
        let v = self.forward_raw(features.as_slice(), &mut p);
        Ok((p, v))
    }

    pub fn forward_batch(&self, batch: &[StateFeatures]) -> Result<Vec<(Vec<f64>, f64)>, ModelError> {
        batch.iter().map(|f| self.forward(f)).collect()
    }

    /// Mean over the batch of `(z - v)^2 - w * pi^T log p`, plus `c * |θ|^2`,
    /// together with its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, batch: &[TrainingSample], c: f64) -> Result<(LossReport, Vec<f64>), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let n = batch.len() as f64;
        let depth = self.shape.hidden_layers;
        let actions = self.shape.actions;
        let mut grad = vec![0.0; self.params.len()];
        let mut report = LossReport::default();

        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
        let mut logits = Vec::with_capacity(actions);
        let mut vout = Vec::with_capacity(1);
        let mut dlogit = vec![0.0; actions];
        for sample in batch {
            self.check_input(&sample.features)?;
            if sample.policy.len() != actions {
                return Err(ModelError::Shape(format!(
                    "policy target has {} entries, network has {actions} actions",
                    sample.policy.len()
                )));
            }
            acts[0].clear();
            acts[0].extend_from_slice(sample.features.as_slice());
            for l in 0..depth {
                let (lo, hi) = acts.split_at_mut(l + 1);
                dense(&self.params, &self.layers[l], &lo[l], &mut hi[0]);
                hi[0].iter_mut().for_each(|v| *v = v.max(0.0));
            }
            let h = &acts[depth];
            dense(&self.params, self.policy_layer(), h, &mut logits);
            let raw_logits = logits.clone();
            let lse = softmax_in_place(&mut logits);
            let p = &logits;
            dense(&self.params, self.value_layer(), h, &mut vout);
            let v = vout[0].tanh();

            let z = sample.value;
            let w = sample.policy_weight;
            let value_loss = (z - v) * (z - v);
            let mut ce = 0.0;
            let mut pi_sum = 0.0;
            for (pi, l) in sample.policy.iter().zip(&raw_logits) {
                if *pi != 0.0 {
                    ce -= pi * (l - lse);
                }
                pi_sum += pi;
            }
            report.value += value_loss / n;
            report.policy += w * ce / n;

            let dv = 2.0 * (v - z) * (1.0 - v * v) / n;
            for j in 0..actions {
                dlogit[j] = w * (p[j] * pi_sum - sample.policy[j]) / n;
            }

            // heads
            let pl = *self.policy_layer();
            let vl = *self.value_layer();
            let mut dh = vec![0.0; h.len()];
            for (i, &hi) in h.iter().enumerate() {
                let prow = pl.w + i * actions;
                let mut acc = 0.0;
                for j in 0..actions {
                    grad[prow + j] += hi * dlogit[j];
                    acc += self.params[prow + j] * dlogit[j];
                }
                grad[vl.w + i] += hi * dv;
                acc += self.params[vl.w + i] * dv;
                dh[i] = acc;
            }
            for j in 0..actions {
                grad[pl.b + j] += dlogit[j];
            }
            grad[vl.b] += dv;

            // trunk
            for l in (0..depth).rev() {
                let layer = self.layers[l];
                let out = &acts[l + 1];
                let delta: Vec<f64> = dh
                    .iter()
                    .zip(out)
                    .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
                    .collect();
                let input = &acts[l];
                let mut dprev = if l > 0 { vec![0.0; layer.fan_in] } else { Vec::new() };
                for (i, &xi) in input.iter().enumerate() {
                    let row = layer.w + i * layer.fan_out;
                    if xi != 0.0 {
                        for j in 0..layer.fan_out {
                            grad[row + j] += xi * delta[j];
                        }
                    }
                    if l > 0 {
                        let mut acc = 0.0;
                        for j in 0..layer.fan_out {
                            acc += self.params[row + j] * delta[j];
                        }
                        dprev[i] = acc;
                    }
                }
                for j in 0..layer.fan_out {
                    grad[layer.b + j] += delta[j];
                }
                dh = dprev;
            }
        }

        report.l2 = c * self.l2_norm_sq();
        report.total = report.value + report.policy + report.l2;
        if c != 0.0 {
            for (g, p) in grad.iter_mut().zip(&self.params) {
                *g += 2.0 * c * p;
            }
        }
        Ok((report, grad))
    }

    pub fn loss(&self, batch: &[TrainingSample], c: f64) -> Result<LossReport, ModelError> {
        self.loss_and_grad(batch, c).map(|(r, _)| r)
    }

    /// One SGD update `θ ← θ - lr ∇loss`. Returns the loss before the update.
    pub fn sgd_step(&mut self, batch: &[TrainingSample], lr: f64, c: f64) -> Result<LossReport, ModelError> {
        let (report, grad) = self.loss_and_grad(batch, c)?;
        if !report.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFinite { update: self.updates });
        }
        if lr != 0.0 {
            for (p, g) in self.params.iter_mut().zip(&grad) {
                *p -= lr * g;
            }
        }
        self.updates += 1;
        Ok(report)
    }
}
