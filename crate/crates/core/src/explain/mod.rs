//! Information gain, Shapley attributions, LIME surrogates and the fused
//! IG/SHAP feature weights.

mod fusion;
mod ig;
mod lime;
mod shap;

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};

pub use fusion::{fuse_weights, FusionWeights, DEFAULT_ALPHA};
pub use ig::{entropy_bits, information_gain, information_gains, IgScores};
pub use lime::{default_kernel_width, lime_explain, LimeConfig, LimeExplanation};
pub use shap::{
    mean_absolute_attributions, shap_exact, shap_linear, shap_sampled, Scale, ShapExplanation, ShapMethod,
    MAX_EXACT_FEATURES,
};

/// Rows used as the Shapley / LIME reference distribution by default.
pub const BACKGROUND_ROWS: usize = 100;

/// Up to `rows` samples drawn without replacement with a seeded RNG, in
/// their original order.
pub fn background_sample(ds: &Dataset, rows: usize, seed: u64) -> Dataset {
    if ds.len() <= rows {
        return ds.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, ds.len(), rows).into_vec();
    idx.sort_unstable();
    ds.subset(&idx)
}

/// Per-column means of a non-empty reference set.
pub fn column_means(background: &Dataset) -> Result<Vec<f64>> {
    if background.is_empty() {
        return Err(Error::EmptyReferenceSet);
    }
    let n = background.len() as f64;
    let mut mean = vec![0.0; background.n_features()];
    for s in &background.samples {
        for (m, v) in mean.iter_mut().zip(&s.features) {
            *m += v / n;
        }
    }
    Ok(mean)
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Pushes the score toward phishing.
    Phishing,
    /// Pushes the score toward legitimate.
    Legitimate,
    Neutral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionRow {
    pub feature: String,
    pub value: f64,
    pub attribution: f64,
    pub direction: Direction,
}

/// Rows sorted by descending |attribution|; ties keep feature order.
pub fn rank_attributions(names: &[String], x: &[f64], attributions: &[f64]) -> Vec<AttributionRow> {
    let mut rows: Vec<AttributionRow> = names
        .iter()
        .zip(x)
        .zip(attributions)
        .map(|((name, &value), &a)| AttributionRow {
            feature: name.clone(),
            value,
            attribution: a,
            direction: if a > 0.0 {
                Direction::Phishing
            } else if a < 0.0 {
                Direction::Legitimate
            } else {
                Direction::Neutral
            },
        })
        .collect();
    rows.sort_by(|a, b| b.attribution.abs().total_cmp(&a.attribution.abs()));
    rows
}

/// Text bar chart: `+` bars push toward phishing, `-` toward legitimate.
pub fn render_bars(rows: &[AttributionRow], width: usize) -> String {
    let name_w = rows.iter().map(|r| r.feature.len()).max().unwrap_or(0);
    let peak = rows.iter().map(|r| r.attribution.abs()).fold(0.0, f64::max);
    let mut out = String::new();
    for r in rows {
        let len = if peak > 0.0 {
            ((r.attribution.abs() / peak) * width as f64).round() as usize
        } else {
            0
        };
        let glyph = if r.attribution < 0.0 { "-" } else { "+" };
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>8}  {:>+10.5}  {}",
            r.feature,
            crate::datasets::format_value(r.value),
            r.attribution,
            glyph.repeat(len)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Provenance;

    #[test]
    fn ranking_orders_by_magnitude() {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let rows = rank_attributions(&names, &[1.0, 0.0, -1.0], &[0.1, -0.5, 0.0]);
        assert_eq!(rows[0].feature, "b");
        assert_eq!(rows[0].direction, Direction::Legitimate);
        assert_eq!(rows[2].direction, Direction::Neutral);
        let bars = render_bars(&rows, 10);
        assert!(bars.lines().next().unwrap().ends_with("----------"));
    }

    #[test]
    fn background_sample_is_seeded_subset() {
        let ds = Dataset::from_rows(
            "t",
            vec!["x".into()],
            (0..300).map(|i| vec![i as f64]).collect(),
            vec![0; 300],
            Provenance::Unknown,
        )
        .unwrap();
        let a = background_sample(&ds, 100, 4);
        assert_eq!(a.len(), 100);
        assert_eq!(a, background_sample(&ds, 100, 4));
        assert_eq!(background_sample(&ds, 1000, 4).len(), 300);
        assert!(column_means(&ds.subset(&[])).is_err());
    }
}
