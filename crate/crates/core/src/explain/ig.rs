use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};

/// Per-feature information gain in bits, in dataset column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgScores {
    pub gains: Vec<(String, f64)>,
    pub label_entropy: f64,
}

impl IgScores {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.gains.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Shannon entropy in bits of a count vector; zero counts contribute 0.
pub fn entropy_bits(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Discrete codes for a column: values themselves when ternary, otherwise
/// tercile bins.
fn discretize(column: &[f64]) -> Vec<i64> {
    if column.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)) {
        return column.iter().map(|&v| v as i64).collect();
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (q1, q2) = (sorted[(n - 1) / 3], sorted[2 * (n - 1) / 3]);
    column
        .iter()
        .map(|&v| if v <= q1 { 0 } else if v <= q2 { 1 } else { 2 })
        .collect()
}

fn gain(labels: &[u8], column: &[f64]) -> (f64, f64) {
    let ones = labels.iter().filter(|&&y| y == 1).count();
    let h_y = entropy_bits(&[labels.len() - ones, ones]);
    let mut groups: BTreeMap<i64, [usize; 2]> = BTreeMap::new();
    for (code, &y) in discretize(column).into_iter().zip(labels) {
        groups.entry(code).or_default()[usize::from(y)] += 1;
    }
    let n = labels.len() as f64;
    let conditional: f64 = groups
        .values()
        .map(|c| (c[0] + c[1]) as f64 / n * entropy_bits(c))
        .sum();
    ((h_y - conditional).clamp(0.0, h_y), h_y)
}

/// IG(Y, X) = H(Y) − Σ_x P(x) H(Y | X = x), base 2.
pub fn information_gain(ds: &Dataset, feature: &str) -> Result<f64> {
    let j = ds
        .feature_index(feature)
        .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(gain(&ds.labels(), &ds.column(j)).0)
}

pub fn information_gains(ds: &Dataset) -> Result<IgScores> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = ds.labels();
    let ones = labels.iter().filter(|&&y| y == 1).count();
    let gains = ds
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), gain(&labels, &ds.column(j)).0))
        .collect();
    Ok(IgScores {
        gains,
        label_entropy: entropy_bits(&[labels.len() - ones, ones]),
    })
}
