use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::TrainConfig;
use crate::datasets::Dataset;
use crate::error::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Logistic,
    /// Squared hinge, max(0, 1 - s z)^2 with s ∈ {-1, 1}.
    Hinge,
    /// ½ (z - s)^2 with s ∈ {-1, 1}.
    Squared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    None,
    L1 { lambda: f64 },
    L2 { lambda: f64 },
    Elastic { l1: f64, l2: f64 },
}

impl Regularization {
    fn l1(self) -> f64 {
        match self {
            Regularization::L1 { lambda } => lambda,
            Regularization::Elastic { l1, .. } => l1,
            _ => 0.0,
        }
    }

    fn l2(self) -> f64 {
        match self {
            Regularization::L2 { lambda } => lambda,
            Regularization::Elastic { l2, .. } => l2,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Full-batch proximal gradient descent with backtracking.
    Batch,
    /// Minibatch SGD with a 1/(1 + t/T) step decay.
    Sgd { batch_size: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSpec {
    pub loss: Loss,
    pub regularization: Regularization,
    pub solver: Solver,
}

impl LinearSpec {
    pub fn logistic() -> Self {
        Self {
            loss: Loss::Logistic,
            regularization: Regularization::None,
            solver: Solver::Batch,
        }
    }

    pub fn ridge() -> Self {
        Self {
            loss: Loss::Squared,
            regularization: Regularization::L2 { lambda: 1e-3 },
            solver: Solver::Batch,
        }
    }

    pub fn sgd() -> Self {
        Self {
            loss: Loss::Logistic,
            regularization: Regularization::L2 { lambda: 1e-4 },
            solver: Solver::Sgd { batch_size: 32 },
        }
    }

    pub fn elastic() -> Self {
        Self {
            loss: Loss::Logistic,
            regularization: Regularization::Elastic { l1: 1e-3, l2: 1e-3 },
            solver: Solver::Batch,
        }
    }

    pub fn svm() -> Self {
        Self {
            loss: Loss::Hinge,
            regularization: Regularization::L2 { lambda: 1e-3 },
            solver: Solver::Batch,
        }
    }
}

/// Weights live in raw feature space: standardization applied during
/// training is folded back into `weights` and `bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: Loss,
    pub regularization: Regularization,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self {
            weights,
            bias,
            loss: Loss::Logistic,
            regularization: Regularization::None,
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(vec![0.0; d], 0.0)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    loss: Loss,
    l1: f64,
    l2: f64,
}

impl Problem<'_> {
    /// Per-sample loss and derivative with respect to the decision value.
    fn pointwise(&self, z: f64, y: f64) -> (f64, f64) {
        let s = 2.0 * y - 1.0;
        match self.loss {
            Loss::Logistic => (softplus(-s * z), sigmoid(z) - y),
            Loss::Hinge => {
                let m = (1.0 - s * z).max(0.0);
                (m * m, -2.0 * s * m)
            }
            Loss::Squared => {
                let r = z - s;
                (0.5 * r * r, r)
            }
        }
    }

    /// Smooth part of the objective on rows `idx` (all rows when None).
    fn smooth(&self, w: &[f64], b: f64, idx: Option<&[usize]>) -> (f64, Vec<f64>, f64) {
        let d = w.len();
        let mut grad = vec![0.0; d];
        let mut gb = 0.0;
        let mut total = 0.0;
        let mut visit = |i: usize| {
            let xi = &self.x[i];
            let z = b + w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>();
            let (l, dz) = self.pointwise(z, self.y[i]);
            total += l;
            gb += dz;
            for (g, v) in grad.iter_mut().zip(xi) {
                *g += dz * v;
            }
        };
        let n = match idx {
            Some(rows) => {
                rows.iter().for_each(|&i| visit(i));
                rows.len()
            }
            None => {
                (0..self.x.len()).for_each(&mut visit);
                self.x.len()
            }
        } as f64;
        let sq: f64 = w.iter().map(|v| v * v).sum();
        for (g, wj) in grad.iter_mut().zip(w) {
            *g = *g / n + self.l2 * wj;
        }
        (total / n + 0.5 * self.l2 * sq, grad, gb / n)
    }

    fn objective(&self, w: &[f64], b: f64) -> f64 {
        self.smooth(w, b, None).0 + self.l1 * w.iter().map(|v| v.abs()).sum::<f64>()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn proximal_gradient(p: &Problem, cfg: &TrainConfig, d: usize) -> Result<(Vec<f64>, f64)> {
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut step = cfg.learning_rate;
    let (mut f, mut g, mut gb) = p.smooth(&w, b, None);
    if !f.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    for iteration in 1..=cfg.max_epochs {
        let mut accepted = None;
        for _ in 0..60 {
            let w_new: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(wj, gj)| soft_threshold(wj - step * gj, step * p.l1))
                .collect();
            let b_new = b - step * gb;
            let (f_new, g_new, gb_new) = p.smooth(&w_new, b_new, None);
            let diff_sq: f64 = w_new.iter().zip(&w).map(|(a, c)| (a - c).powi(2)).sum::<f64>() + (b_new - b).powi(2);
            let lin: f64 = w_new.iter().zip(&w).zip(&g).map(|((a, c), gj)| (a - c) * gj).sum::<f64>() + (b_new - b) * gb;
            if f_new.is_finite() && f_new <= f + lin + diff_sq / (2.0 * step) + 1e-15 * f.abs() {
                accepted = Some((w_new, b_new, f_new, g_new, gb_new, diff_sq));
                break;
            }
            step *= 0.5;
        }
        let Some((w_new, b_new, f_new, g_new, gb_new, diff_sq)) = accepted else {
            return Err(Error::NonFiniteLoss { iteration });
        };
        let scale = 1.0 + w_new.iter().fold(b_new.abs(), |m, v| m.max(v.abs()));
        let converged = diff_sq.sqrt() <= 1e-10 * scale;
        (w, b, f, g, gb) = (w_new, b_new, f_new, g_new, gb_new);
        if converged {
            break;
        }
        step *= 1.5;
    }
    Ok((w, b))
}

fn sgd(p: &Problem, cfg: &TrainConfig, d: usize, batch_size: usize) -> Result<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..p.x.len()).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let eta0 = cfg.learning_rate * 0.1;
    let mut t = 0usize;
    let decay = 10.0 * (p.x.len() / batch_size.max(1)).max(1) as f64;
    for epoch in 1..=cfg.max_epochs.min(200) {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size.max(1)) {
            let (_, g, gb) = p.smooth(&w, b, Some(chunk));
            let eta = eta0 / (1.0 + t as f64 / decay);
            for (wj, gj) in w.iter_mut().zip(&g) {
                *wj = soft_threshold(*wj - eta * gj, eta * p.l1);
            }
            b -= eta * gb;
            t += 1;
        }
        if !p.objective(&w, b).is_finite() {
            return Err(Error::NonFiniteLoss { iteration: epoch });
        }
    }
    Ok((w, b))
}

/// Fits a linear classifier by minimizing mean loss plus the regularizer.
pub fn train_linear(ds: &Dataset, spec: &LinearSpec, cfg: &TrainConfig) -> Result<LinearModel> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !ds.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!("learning rate {}", cfg.learning_rate)));
    }
    let rows = ds.rows();
    let scaler = cfg.standardize.then(|| Standardizer::fit(&rows));
    let x: Vec<Vec<f64>> = match &scaler {
        Some(s) => s.transform_all(&rows),
        None => rows.iter().map(|r| r.to_vec()).collect(),
    };
    let y: Vec<f64> = ds.samples.iter().map(|s| f64::from(s.label)).collect();
    let problem = Problem {
        x: &x,
        y: &y,
        loss: spec.loss,
        l1: spec.regularization.l1(),
        l2: spec.regularization.l2(),
    };
    let d = ds.n_features();
    let (mut w, mut b) = match spec.solver {
        Solver::Batch => proximal_gradient(&problem, cfg, d)?,
        Solver::Sgd { batch_size } => sgd(&problem, cfg, d, batch_size)?,
    };
    if let Some(s) = &scaler {
        for (j, wj) in w.iter_mut().enumerate() {
            if s.is_constant(j) {
                *wj = 0.0;
            } else {
                *wj /= s.scale[j];
                b -= *wj * s.mean[j];
            }
        }
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: cfg.max_epochs });
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        loss: spec.loss,
        regularization: spec.regularization,
    })
}
