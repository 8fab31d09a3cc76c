use serde::Serialize;

use crate::error::{Error, Result};
use crate::explain::FusionWeights;
use crate::features::Feature;
use crate::learners::{label_for, TrainedModel};

/// Rationale entries reported per classification.
pub const RATIONALE_LEN: usize = 3;

/// Per-feature multipliers for the weighted embedding x ⊙ w: fused weight
/// w_j inside F_final, 1 outside.
pub fn fusion_vector(fusion: &FusionWeights, names: &[String]) -> Vec<f64> {
    names
        .iter()
        .map(|n| fusion.weights.get(n).copied().unwrap_or(1.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub label: u8,
    pub probability: f64,
    pub rationale: Vec<String>,
    /// Feature indices behind `rationale`, in the same order.
    pub rationale_features: Vec<usize>,
}

fn describe(names: &[String], j: usize, value: f64) -> String {
    match names[j].parse::<Feature>() {
        Ok(f) => f.describe(value),
        Err(_) => format!("{} = {}", names[j], crate::datasets::format_value(value)),
    }
}

/// Scores f(x ⊙ w). The rationale ranks features by |w_j · x_j · β_j| for
/// linear models and by the score change from zeroing the weighted input
/// otherwise; zero contributions are omitted.
pub fn classify_with_fusion(x: &[f64], model: &TrainedModel, weights: &[f64], names: &[String]) -> Result<Classification> {
    let d = model.n_features();
    for len in [x.len(), weights.len(), names.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    let z: Vec<f64> = x.iter().zip(weights).map(|(a, w)| a * w).collect();
    let probability = model.proba(&z);
    let contributions: Vec<f64> = match model.as_linear() {
        Some(lin) => z.iter().zip(&lin.weights).map(|(zj, b)| zj * b).collect(),
        None => (0..d)
            .map(|j| {
                if z[j] == 0.0 {
                    return 0.0;
                }
                let mut occluded = z.clone();
                occluded[j] = 0.0;
                probability - model.proba(&occluded)
            })
            .collect(),
    };
    let mut order: Vec<usize> = (0..d).filter(|&j| contributions[j] != 0.0).collect();
    order.sort_by(|&a, &b| contributions[b].abs().total_cmp(&contributions[a].abs()).then(a.cmp(&b)));
    order.truncate(RATIONALE_LEN);
    Ok(Classification {
        label: label_for(probability),
        probability,
        rationale: order.iter().map(|&j| describe(names, j, x[j])).collect(),
        rationale_features: order,
    })
}
