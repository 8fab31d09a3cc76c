use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{sigmoid, softplus};
use super::standardize::Standardizer;
use crate::datasets::Dataset;
use crate::error::{Error, Result};

/// Binary cross-entropy −[y ln ŷ + (1−y) ln(1−ŷ)], with 0 · ln 0 = 0.
pub fn bce(y: f64, y_hat: f64) -> f64 {
    let term = |t: f64, p: f64| if t == 0.0 { 0.0 } else { -t * p.ln() };
    term(y, y_hat) + term(1.0 - y, 1.0 - y_hat)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => f64::from(u8::from(a > 0.0)),
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// `weights` is row-major, outputs × inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// The last layer has one output and a sigmoid activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub scaler: Option<Standardizer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Output sizes per layer; must end in 1.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub learning_rate: f64,
    /// Epoch `e` steps with `learning_rate / (1 + lr_decay · e)`.
    pub lr_decay: f64,
    pub max_epochs: usize,
    /// Early stopping on a 10% holdout; 0 disables the holdout.
    pub patience: usize,
    pub batch_size: usize,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            layer_sizes: vec![64, 32, 1],
            hidden_activation: Activation::Relu,
            learning_rate: 1e-3,
            lr_decay: 0.0,
            max_epochs: 200,
            patience: 10,
            batch_size: 32,
            standardize: true,
            seed: 0,
        }
    }
}

impl MlpModel {
    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, Layer::inputs)
    }

    fn prepare(&self, x: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => s.transform(x),
            None => x.to_vec(),
        }
    }

    /// Output logit for an already-scaled input.
    fn logit(&self, x: &[f64]) -> f64 {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.pre_activation(&h);
            if l == last {
                return z[0];
            }
            h = z.into_iter().map(|v| layer.activation.apply(v)).collect();
        }
        unreachable!("model has at least one layer")
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(&self.prepare(x)))
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.bias.len() * (l.inputs() + 1)).sum()
    }

    /// Parameters flattened layer by layer, weights row-major then biases.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for l in &self.layers {
            l.weights.iter().for_each(|r| out.extend_from_slice(r));
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_parameters(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for r in &mut l.weights {
                for w in r.iter_mut() {
                    *w = p[k];
                    k += 1;
                }
            }
            for b in &mut l.bias {
                *b = p[k];
                k += 1;
            }
        }
    }

    /// Mean BCE over the batch and its gradient in
    /// [`flat_parameters`](Self::flat_parameters) order. Inputs are scaled
    /// with the model's standardizer first.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let scaled: Vec<Vec<f64>> = xs.iter().map(|x| self.prepare(x)).collect();
        let refs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        self.scaled_loss_and_gradient(&refs, ys)
    }

    fn scaled_loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let n = xs.len() as f64;
        let mut grads: Vec<(Vec<Vec<f64>>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![vec![0.0; l.inputs()]; l.bias.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for (x, &y) in xs.iter().zip(ys) {
            let mut acts: Vec<Vec<f64>> = vec![x.to_vec()];
            let mut z_out = 0.0;
            for (l, layer) in self.layers.iter().enumerate() {
                let z = layer.pre_activation(acts.last().unwrap());
                if l == last {
                    z_out = z[0];
                } else {
                    acts.push(z.into_iter().map(|v| layer.activation.apply(v)).collect());
                }
            }
            loss += softplus(z_out) - y * z_out;
            let mut delta = vec![sigmoid(z_out) - y];
            for l in (0..self.layers.len()).rev() {
                let input = &acts[l];
                let (gw, gb) = &mut grads[l];
                for (o, d) in delta.iter().enumerate() {
                    gb[o] += d;
                    for (g, a) in gw[o].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let below = &self.layers[l - 1];
                delta = (0..input.len())
                    .map(|i| {
                        let back: f64 = delta.iter().enumerate().map(|(o, d)| d * self.layers[l].weights[o][i]).sum();
                        back * below.activation.derivative(input[i])
                    })
                    .collect();
            }
        }
        let mut flat = Vec::with_capacity(self.n_parameters());
        for (gw, gb) in grads {
            gw.iter().for_each(|r| flat.extend(r.iter().map(|g| g / n)));
            flat.extend(gb.iter().map(|g| g / n));
        }
        (loss / n, flat)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, layer_sizes: &[usize], hidden: Activation, seed: u64) -> Result<Self> {
        if layer_sizes.last() != Some(&1) {
            return Err(Error::InvalidConfig("layer_sizes must end in 1".into()));
        }
        if layer_sizes.contains(&0) || n_inputs == 0 {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fan_in = n_inputs;
        let mut layers = Vec::with_capacity(layer_sizes.len());
        for (l, &out) in layer_sizes.iter().enumerate() {
            let limit = (6.0 / (fan_in + out) as f64).sqrt();
            let weights = (0..out)
                .map(|_| (0..fan_in).map(|_| rng.gen_range(-limit..limit)).collect())
                .collect();
            let activation = if l + 1 == layer_sizes.len() {
                Activation::Sigmoid
            } else {
                hidden
            };
            layers.push(Layer {
                weights,
                bias: vec![0.0; out],
                activation,
            });
            fan_in = out;
        }
        Ok(Self { layers, scaler: None })
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * grad[k];
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * grad[k] * grad[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Adam on mean BCE. With `patience > 0` a seeded 10% holdout drives early
/// stopping and the best holdout weights are restored.
pub fn train_mlp(ds: &Dataset, params: &MlpParams) -> Result<MlpModel> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!("learning rate {}", params.learning_rate)));
    }
    let mut model = MlpModel::init(ds.n_features(), &params.layer_sizes, params.hidden_activation, params.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let (train_idx, holdout_idx) = if params.patience > 0 && ds.len() >= 10 {
        order.shuffle(&mut rng);
        let cut = ds.len() / 10;
        (order[cut..].to_vec(), order[..cut].to_vec())
    } else {
        (order, Vec::new())
    };
    let rows = ds.rows();
    if params.standardize {
        let fit_rows: Vec<&[f64]> = train_idx.iter().map(|&i| rows[i]).collect();
        model.scaler = Some(Standardizer::fit(&fit_rows));
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| model.prepare(r)).collect();
    let y: Vec<f64> = ds.samples.iter().map(|s| f64::from(s.label)).collect();
    let batch = |idx: &[usize]| -> (Vec<&[f64]>, Vec<f64>) {
        (idx.iter().map(|&i| x[i].as_slice()).collect(), idx.iter().map(|&i| y[i]).collect())
    };

    let mut theta = model.flat_parameters();
    let mut adam = Adam::new(theta.len());
    let mut best = (f64::INFINITY, theta.clone());
    let mut stale = 0;
    let mut train_order = train_idx;
    let batch_size = params.batch_size.max(1);
    for epoch in 1..=params.max_epochs {
        train_order.shuffle(&mut rng);
        let lr = params.learning_rate / (1.0 + params.lr_decay * (epoch - 1) as f64);
        for chunk in train_order.chunks(batch_size) {
            let (xb, yb) = batch(chunk);
            let (loss, grad) = model.scaled_loss_and_gradient(&xb, &yb);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { iteration: epoch });
            }
            adam.step(&mut theta, &grad, lr);
            model.set_flat_parameters(&theta);
        }
        if holdout_idx.is_empty() {
            continue;
        }
        let (xh, yh) = batch(&holdout_idx);
        let val = model.scaled_loss_and_gradient(&xh, &yh).0;
        if !val.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: epoch });
        }
        if val < best.0 - 1e-7 {
            best = (val, theta.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= params.patience {
                break;
            }
        }
    }
    if !holdout_idx.is_empty() {
        model.set_flat_parameters(&best.1);
    }
    Ok(model)
}


#[cfg(test)]
mod logistic_equivalence {
    use super::*;
    use crate::datasets::Provenance;
    use crate::learners::{train_linear, LinearSpec, TrainConfig};

    #[test]
    fn zero_hidden_layers_match_logistic_regression() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![((i * 37) % 23) as f64 / 11.5 - 1.0, ((i * 11) % 7) as f64 / 3.5 - 1.0])
            .collect();
        let labels: Vec<u8> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| u8::from(r[0] - 0.5 * r[1] > 0.0) ^ u8::from(i % 6 == 0))
            .collect();
        let ds = Dataset::from_rows("t", vec!["a".into(), "b".into()], rows, labels, Provenance::Unknown).unwrap();
        let mlp = train_mlp(
            &ds,
            &MlpParams {
                layer_sizes: vec![1],
                learning_rate: 0.05,
                lr_decay: 1e-4,
                max_epochs: 50_000,
                patience: 0,
                batch_size: 50,
                standardize: false,
                seed: 3,
                ..MlpParams::default()
            },
        )
        .unwrap();
        let cfg = TrainConfig {
            standardize: false,
            max_epochs: 100_000,
            seed: 3,
            ..TrainConfig::default()
        };
        let lin = train_linear(&ds, &LinearSpec::logistic(), &cfg).unwrap();
        let worst = ds
            .samples
            .iter()
            .map(|s| (mlp.proba(&s.features) - lin.proba(&s.features)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "max |Δp| = {worst:e}");
    }
}
