use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Assigns each sample to one of `k` folds. Indices of each class are
/// shuffled with a seeded RNG, then dealt round-robin, legitimate first, with
/// the dealing position carried over between classes. Every fold's per-class
/// count differs from any other fold's by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("folds = {k} (need >= 2)")));
    }
    if labels.len() < k {
        return Err(Error::InvalidConfig(format!(
            "{} samples cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Training indices complementary to fold `f`.
pub(crate) fn training_indices(folds: &[Vec<usize>], f: usize) -> Vec<usize> {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(g, _)| *g != f)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    train.sort_unstable();
    train
}
