use serde::Serialize;

use crate::datasets::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::learners::Standardizer;

/// k-nearest-neighbour provenance check against a labelled reference set,
/// on standardized canonical vectors.
#[derive(Clone, Debug)]
pub struct PcsConfig {
    pub k: usize,
    pub threshold: f64,
    reference: Vec<(Vec<f64>, Provenance)>,
    scaler: Standardizer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PcsResult {
    pub pcs: f64,
    pub flagged: bool,
    pub claimed: Provenance,
}

impl PcsConfig {
    pub fn new(reference: &Dataset, k: usize, threshold: f64) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::EmptyReferenceSet);
        }
        if k == 0 || k > reference.len() {
            return Err(Error::InvalidConfig(format!(
                "pcs k = {k} must be in 1..={}",
                reference.len()
            )));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!("pcs threshold {threshold} outside [0, 1]")));
        }
        let scaler = Standardizer::fit(&reference.rows());
        let reference = reference
            .samples
            .iter()
            .map(|s| (scaler.transform(&s.features), s.provenance))
            .collect();
        Ok(Self {
            k,
            threshold,
            reference,
            scaler,
        })
    }

    pub fn reference_len(&self) -> usize {
        self.reference.len()
    }

    /// Fraction of the k nearest references (ties by insertion order)
    /// whose provenance equals `claimed`; flagged when below the threshold.
    pub fn score(&self, x: &[f64], claimed: Provenance) -> Result<PcsResult> {
        if self.reference.is_empty() {
            return Err(Error::EmptyReferenceSet);
        }
        let d = self.reference[0].0.len();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let z = self.scaler.transform(x);
        let mut dist: Vec<(f64, usize)> = self
            .reference
            .iter()
            .enumerate()
            .map(|(i, (r, _))| (r.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        // Stable sort keeps insertion order among equal distances.
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let matches = dist[..self.k]
            .iter()
            .filter(|(_, i)| self.reference[*i].1 == claimed)
            .count();
        let pcs = matches as f64 / self.k as f64;
        Ok(PcsResult {
            pcs,
            flagged: pcs < self.threshold,
            claimed,
        })
    }
}

/// Calls [`PcsConfig::score`].
pub fn provenance_score(x: &[f64], claimed: Provenance, pcs: &PcsConfig) -> Result<PcsResult> {
    pcs.score(x, claimed)
}
