#![allow(dead_code)]

use phishguard::datasets::{Dataset, Provenance, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

pub fn dataset(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
    let d = rows.first().map_or(0, Vec::len);
    let samples = rows
        .into_iter()
        .zip(labels)
        .map(|(features, label)| Sample {
            features,
            label,
            provenance: Provenance::Uci,
        })
        .collect();
    Dataset::new("t", names(d), samples).unwrap()
}

/// n × d ternary rows with random labels, seeded.
pub fn random_ternary(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| f64::from(rng.gen_range(-1i8..=1))).collect())
        .collect();
    let labels = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
    dataset(rows, labels)
}

/// Ternary rows labelled by a noisy linear rule on the first three columns.
pub fn separable(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| f64::from(rng.gen_range(-1i8..=1))).collect();
        let s = 2.0 * x[0] + x[1] - x[2] + rng.gen_range(-0.5..0.5);
        labels.push(u8::from(s > 0.0));
        rows.push(x);
    }
    dataset(rows, labels)
}

/// P(score_i > score_j) + ½P(tie) over positive/negative pairs.
pub fn pairwise_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi == 1 && yj == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Entropy in bits of a label multiset, written out independently.
pub fn label_entropy(labels: &[u8]) -> f64 {
    let n = labels.len() as f64;
    let ones = labels.iter().filter(|&&y| y == 1).count() as f64;
    [ones, n - ones]
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).log2())
        .sum()
}
