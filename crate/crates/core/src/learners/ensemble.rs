use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{sigmoid, softplus};
use super::tree::{grow, Binned, DecisionTree, SplitMode, Stats, TreeKind, TreeParams};
use crate::datasets::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    Bagging,
    Extra,
    Boosting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub tree: DecisionTree,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<Member>,
    pub mode: EnsembleMode,
    pub learning_rate: f64,
    /// Initial logit for boosting; 0 otherwise.
    pub base_score: f64,
}

impl Ensemble {
    pub fn n_features(&self) -> usize {
        self.members.first().map_or(0, |m| m.tree.n_features)
    }

    /// Boosting: summed logit. Averaging modes: the averaged probability.
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.members.iter().map(|m| m.weight * m.tree.predict_value(x)).sum();
        match self.mode {
            EnsembleMode::Boosting => self.base_score + sum,
            _ => sum,
        }
    }

    pub fn proba(&self, x: &[f64]) -> f64 {
        match self.mode {
            EnsembleMode::Boosting => sigmoid(self.raw_score(x)),
            _ => self.raw_score(x).clamp(0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mode: EnsembleMode,
    pub bootstrap: bool,
    /// None means ⌊√d⌋ (at least 1).
    pub max_features: Option<usize>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl ForestParams {
    pub fn bagging(n_trees: usize) -> Self {
        Self {
            n_trees,
            mode: EnsembleMode::Bagging,
            bootstrap: true,
            max_features: None,
            max_depth: 64,
            min_samples_leaf: 1,
        }
    }

    pub fn extra(n_trees: usize) -> Self {
        Self {
            n_trees,
            mode: EnsembleMode::Extra,
            bootstrap: false,
            ..Self::bagging(n_trees)
        }
    }
}

/// Averaging ensemble of bootstrapped CART trees (bagging) or
/// random-threshold trees on the full sample (extra). Tree `m` draws from
/// stream `m` of the seeded generator, so results do not depend on thread
/// scheduling.
pub fn train_forest(ds: &Dataset, params: &ForestParams, seed: u64) -> Result<Ensemble> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
    }
    let split_mode = match params.mode {
        EnsembleMode::Bagging => SplitMode::Best,
        EnsembleMode::Extra => SplitMode::Random,
        EnsembleMode::Boosting => {
            return Err(Error::InvalidConfig("use train_gbt for boosting".into()));
        }
    };
    let d = ds.n_features();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        split_mode,
        max_features: Some(params.max_features.unwrap_or(((d as f64).sqrt().floor() as usize).max(1))),
    };
    let rows = ds.rows();
    let data = Binned::new(&rows);
    let labels = ds.labels();
    let n = ds.len();
    let weight = 1.0 / params.n_trees as f64;
    let members = (0..params.n_trees)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            let mut counts = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    counts[rng.gen_range(0..n)] += 1.0;
                }
            } else {
                counts.iter_mut().for_each(|c| *c = 1.0);
            }
            let stats = Stats::classification(&labels, &counts);
            Member {
                tree: grow(&data, &stats, &tree_params, TreeKind::Classifier, &mut rng),
                weight,
            }
        })
        .collect();
    Ok(Ensemble {
        members,
        mode: params.mode,
        learning_rate: 1.0,
        base_score: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_rounds: 500,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 1,
        }
    }
}

fn mean_log_loss(logits: &[f64], y: &[f64]) -> f64 {
    logits.iter().zip(y).map(|(z, t)| softplus(*z) - t * z).sum::<f64>() / y.len() as f64
}

pub fn train_gbt(ds: &Dataset, params: &GbtParams) -> Result<Ensemble> {
    train_gbt_with_history(ds, params).map(|(e, _)| e)
}

/// Gradient boosting on the logistic loss. Each round fits a least-squares
/// regression tree to the residuals y − p and sets every leaf to the Newton
/// step Σr / Σp(1−p). The history holds the mean training log-loss before
/// the first round and after each round.
pub fn train_gbt_with_history(ds: &Dataset, params: &GbtParams) -> Result<(Ensemble, Vec<f64>)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if params.n_rounds == 0 {
        return Err(Error::InvalidConfig("n_rounds must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!("learning rate {}", params.learning_rate)));
    }
    if !ds.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    let rows = ds.rows();
    let data = Binned::new(&rows);
    let y: Vec<f64> = ds.samples.iter().map(|s| f64::from(s.label)).collect();
    let rate = y.iter().sum::<f64>() / y.len() as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        split_mode: SplitMode::Best,
        max_features: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut logits = vec![base_score; y.len()];
    let mut history = vec![mean_log_loss(&logits, &y)];
    let mut members = Vec::with_capacity(params.n_rounds);
    for round in 1..=params.n_rounds {
        let mut stats = Stats {
            w: vec![1.0; y.len()],
            a: Vec::with_capacity(y.len()),
            h: Vec::with_capacity(y.len()),
        };
        for (z, t) in logits.iter().zip(&y) {
            let p = sigmoid(*z);
            stats.a.push(t - p);
            stats.h.push(p * (1.0 - p));
        }
        let tree = grow(&data, &stats, &tree_params, TreeKind::Regressor, &mut rng);
        for (z, row) in logits.iter_mut().zip(&rows) {
            *z += params.learning_rate * tree.predict_value(row);
        }
        let loss = mean_log_loss(&logits, &y);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: round });
        }
        history.push(loss);
        members.push(Member {
            tree,
            weight: params.learning_rate,
        });
    }
    Ok((
        Ensemble {
            members,
            mode: EnsembleMode::Boosting,
            learning_rate: params.learning_rate,
            base_score,
        },
        history,
    ))
}
