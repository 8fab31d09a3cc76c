use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, column_means};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::{LinearModel, Scorer};

/// Upper bound on exact subset enumeration (2^n scorer calls).
pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapMethod {
    Exact,
    Linear,
    Sampled { n_samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Logit,
    Probability,
}

/// φ0 + Σ φ_j reproduces the scorer output at x on `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub base_value: f64,
    pub values: Vec<f64>,
    /// Per-feature standard errors (sampled method only).
    pub standard_errors: Option<Vec<f64>>,
    pub method: ShapMethod,
    pub scale: Scale,
}

impl ShapExplanation {
    pub fn total(&self) -> f64 {
        self.base_value + self.values.iter().sum::<f64>()
    }
}

/// Absent features take their background mean.
fn masked(x: &[f64], mean: &[f64], mask: usize) -> Vec<f64> {
    x.iter()
        .zip(mean)
        .enumerate()
        .map(|(j, (xv, mv))| if mask >> j & 1 == 1 { *xv } else { *mv })
        .collect()
}

/// Shapley values by full subset enumeration with weight
/// |S|!(n−|S|−1)!/n!. φ0 = f(∅), the score at the background mean.
pub fn shap_exact<S: Scorer + ?Sized>(
    scorer: &S,
    x: &[f64],
    background: &Dataset,
    max_features: usize,
) -> Result<ShapExplanation> {
    let n = x.len();
    let limit = max_features.min(MAX_EXACT_FEATURES);
    if n > limit {
        return Err(Error::TooManyFeatures { got: n, max: limit });
    }
    check_dim(background.n_features(), x)?;
    let mean = column_means(background)?;
    let values: Vec<f64> = (0..1usize << n)
        .into_par_iter()
        .map(|mask| scorer.score(&masked(x, &mean, mask)))
        .collect();
    // weight[s] = s!(n−s−1)!/n!, built by ratios to avoid factorial overflow.
    let mut weight = vec![0.0; n.max(1)];
    if n > 0 {
        weight[0] = 1.0 / n as f64;
        for s in 1..n {
            weight[s] = weight[s - 1] * s as f64 / (n - s) as f64;
        }
    }
    let phi = (0..n)
        .map(|j| {
            let bit = 1usize << j;
            (0..1usize << n)
                .filter(|m| m & bit == 0)
                .map(|m| weight[m.count_ones() as usize] * (values[m | bit] - values[m]))
                .sum()
        })
        .collect();
    Ok(ShapExplanation {
        base_value: values[0],
        values: phi,
        standard_errors: None,
        method: ShapMethod::Exact,
        scale: Scale::Probability,
    })
}

/// Closed form on the logit: φ_j = w_j (x_j − μ_j), φ0 = wᵀμ + b.
pub fn shap_linear(model: &LinearModel, x: &[f64], background: &Dataset) -> Result<ShapExplanation> {
    check_dim(model.weights.len(), x)?;
    check_dim(background.n_features(), x)?;
    let mean = column_means(background)?;
    Ok(ShapExplanation {
        base_value: model.decision(&mean),
        values: model
            .weights
            .iter()
            .zip(x.iter().zip(&mean))
            .map(|(w, (xv, mv))| w * (xv - mv))
            .collect(),
        standard_errors: None,
        method: ShapMethod::Linear,
        scale: Scale::Logit,
    })
}

/// Permutation Monte Carlo: each sample adds features of x to the
/// background mean in a random order and credits each feature with the
/// score change. Standard errors are sd/√n_samples.
pub fn shap_sampled<S: Scorer + ?Sized>(
    scorer: &S,
    x: &[f64],
    background: &Dataset,
    n_samples: usize,
    seed: u64,
) -> Result<ShapExplanation> {
    if n_samples < 100 {
        return Err(Error::InvalidConfig(format!("n_samples = {n_samples} (need >= 100)")));
    }
    check_dim(background.n_features(), x)?;
    let mean = column_means(background)?;
    let d = x.len();
    let base = scorer.score(&mean);
    let draws: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut order: Vec<usize> = (0..d).collect();
            order.shuffle(&mut rng);
            let mut z = mean.clone();
            let mut prev = base;
            let mut contrib = vec![0.0; d];
            for j in order {
                z[j] = x[j];
                let cur = scorer.score(&z);
                contrib[j] = cur - prev;
                prev = cur;
            }
            contrib
        })
        .collect();
    let n = n_samples as f64;
    let values: Vec<f64> = (0..d).map(|j| draws.iter().map(|c| c[j]).sum::<f64>() / n).collect();
    let errors = (0..d)
        .map(|j| {
            // Identical draws have zero variance regardless of rounding in the mean.
            if draws.iter().all(|c| c[j] == draws[0][j]) {
                return 0.0;
            }
            let var = draws.iter().map(|c| (c[j] - values[j]).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(ShapExplanation {
        base_value: base,
        values,
        standard_errors: Some(errors),
        method: ShapMethod::Sampled { n_samples, seed },
        scale: Scale::Probability,
    })
}

/// Mean |φ_j| across explanations: the global importance used for fusion.
pub fn mean_absolute_attributions(explanations: &[ShapExplanation]) -> Vec<f64> {
    let d = explanations.first().map_or(0, |e| e.values.len());
    let n = explanations.len().max(1) as f64;
    let mut out = vec![0.0; d];
    for e in explanations {
        for (o, v) in out.iter_mut().zip(&e.values) {
            *o += v.abs() / n;
        }
    }
    out
}
