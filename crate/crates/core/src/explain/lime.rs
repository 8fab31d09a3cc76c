use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check_dim;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::{Scorer, Standardizer};

/// 0.75·√d.
pub fn default_kernel_width(d: usize) -> f64 {
    0.75 * (d as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_perturbations: usize,
    /// None means [`default_kernel_width`].
    pub kernel_width: Option<f64>,
    /// Ridge strength Ω on the surrogate weights (intercept unpenalized).
    pub penalty: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            n_perturbations: 1000,
            kernel_width: None,
            penalty: 1e-3,
            seed: 0,
        }
    }
}

/// Surrogate g(z) = intercept + Σ coefficients_j · s_j(z), where s is the
/// background-standardized perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    /// Feature-order surrogate weights.
    pub coefficients: Vec<f64>,
    /// (feature index, weight) by descending |weight|.
    pub ranked: Vec<(usize, f64)>,
    pub intercept: f64,
    pub kernel_width: f64,
    pub n_perturbations: usize,
    pub penalty: f64,
    pub seed: u64,
}

/// Perturbs `x` by replacing each feature, with probability ½, by its value
/// in a uniformly drawn background row, weights samples with
/// exp(−d²/width²) on standardized distance and fits a weighted ridge
/// surrogate.
pub fn lime_explain<S: Scorer + ?Sized>(
    scorer: &S,
    x: &[f64],
    background: &Dataset,
    cfg: &LimeConfig,
) -> Result<LimeExplanation> {
    if cfg.n_perturbations < 50 {
        return Err(Error::InvalidConfig(format!(
            "n_perturbations = {} (need >= 50)",
            cfg.n_perturbations
        )));
    }
    if background.is_empty() {
        return Err(Error::EmptyReferenceSet);
    }
    check_dim(background.n_features(), x)?;
    let d = x.len();
    let width = cfg.kernel_width.unwrap_or_else(|| default_kernel_width(d));
    if width.is_nan() || width <= 0.0 || cfg.penalty < 0.0 {
        return Err(Error::InvalidConfig("kernel width must be positive and penalty non-negative".into()));
    }
    let scaler = Standardizer::fit(&background.rows());
    let origin = scaler.transform(x);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_perturbations;
    let mut perturbed = Vec::with_capacity(n);
    for _ in 0..n {
        let z: Vec<f64> = (0..d)
            .map(|j| {
                if rng.gen_bool(0.5) {
                    background.samples[rng.gen_range(0..background.len())].features[j]
                } else {
                    x[j]
                }
            })
            .collect();
        perturbed.push(z);
    }
    if perturbed.iter().all(|z| *z == perturbed[0]) {
        return Err(Error::DegeneratePerturbations);
    }

    let mut design = DMatrix::<f64>::zeros(n, d + 1);
    let mut target = DVector::<f64>::zeros(n);
    let mut weights = DVector::<f64>::zeros(n);
    for (i, z) in perturbed.iter().enumerate() {
        let s = scaler.transform(z);
        let dist_sq: f64 = s.iter().zip(&origin).map(|(a, b)| (a - b).powi(2)).sum();
        weights[i] = (-dist_sq / (width * width)).exp();
        target[i] = scorer.score(z);
        design[(i, 0)] = 1.0;
        for j in 0..d {
            design[(i, j + 1)] = s[j];
        }
    }
    // (AᵀWA + Ω I') β = AᵀWy, I' skipping the intercept.
    let weighted = DMatrix::from_fn(n, d + 1, |i, j| design[(i, j)] * weights[i]);
    let mut gram = design.transpose() * &weighted;
    for j in 1..=d {
        gram[(j, j)] += cfg.penalty;
    }
    let rhs = weighted.transpose() * &target;
    let beta = gram
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("surrogate solve failed: {e}")))?;

    let coefficients: Vec<f64> = (1..=d).map(|j| beta[j]).collect();
    let mut ranked: Vec<(usize, f64)> = coefficients.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    Ok(LimeExplanation {
        coefficients,
        ranked,
        intercept: beta[0],
        kernel_width: width,
        n_perturbations: n,
        penalty: cfg.penalty,
        seed: cfg.seed,
    })
}
