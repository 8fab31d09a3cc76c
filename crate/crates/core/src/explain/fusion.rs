use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ig::IgScores;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// w_j = α·IĜ_j + β·|φ̂_j| over F_final, where hats are min-max normalized
/// values and a side contributes 0 when j is not in its set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub alpha: f64,
    pub beta: f64,
    pub f_ig: BTreeSet<String>,
    pub f_xai: BTreeSet<String>,
    pub f_final: BTreeSet<String>,
    pub weights: BTreeMap<String, f64>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn normalize(values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let lo = values.values().copied().fold(f64::INFINITY, f64::min);
    let hi = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|(k, v)| {
            let scaled = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
            (k.clone(), scaled)
        })
        .collect()
}

fn above_median(values: &BTreeMap<String, f64>) -> BTreeSet<String> {
    if values.is_empty() {
        return BTreeSet::new();
    }
    let m = median(&values.values().copied().collect::<Vec<_>>());
    values.iter().filter(|(_, v)| **v > m).map(|(k, _)| k.clone()).collect()
}

pub fn fuse_weights(ig: &IgScores, shap_importance: &BTreeMap<String, f64>, alpha: f64) -> Result<FusionWeights> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha = {alpha} outside [0, 1]")));
    }
    let beta = 1.0 - alpha;
    let ig_map: BTreeMap<String, f64> = ig.gains.iter().cloned().collect();
    let abs_phi: BTreeMap<String, f64> = shap_importance.iter().map(|(k, v)| (k.clone(), v.abs())).collect();
    let f_ig = above_median(&ig_map);
    let f_xai = above_median(&abs_phi);
    let f_final: BTreeSet<String> = f_ig.union(&f_xai).cloned().collect();
    if f_final.is_empty() {
        return Err(Error::EmptyFeatureSets);
    }
    let ig_norm = normalize(&ig_map);
    let phi_norm = normalize(&abs_phi);
    let weights = f_final
        .iter()
        .map(|name| {
            let ig_term = if f_ig.contains(name) { ig_norm[name] } else { 0.0 };
            let phi_term = if f_xai.contains(name) { phi_norm[name] } else { 0.0 };
            (name.clone(), alpha * ig_term + beta * phi_term)
        })
        .collect();
    Ok(FusionWeights {
        alpha,
        beta,
        f_ig,
        f_xai,
        f_final,
        weights,
    })
}
