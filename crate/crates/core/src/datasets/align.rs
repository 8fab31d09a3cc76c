use std::collections::BTreeMap;

use super::{Dataset, Sample};
use crate::bundled;
use crate::error::{Error, Result};

/// Explicit alias → canonical column-name table.
#[derive(Clone, Debug, Default)]
pub struct AliasTable {
    aliases: BTreeMap<String, Vec<String>>,
}

impl AliasTable {
    /// Parses `alias canonical` lines.
    pub fn from_text(text: &str) -> Self {
        let mut aliases: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for line in bundled::entries(text) {
            let mut parts = line.split_whitespace();
            if let (Some(alias), Some(canonical)) = (parts.next(), parts.next()) {
                aliases
                    .entry(canonical.to_string())
                    .or_default()
                    .push(alias.to_string());
            }
        }
        Self { aliases }
    }

    pub fn bundled() -> Self {
        Self::from_text(&bundled::read(bundled::ALIASES))
    }

    /// The canonical name followed by its aliases.
    pub fn spellings<'a>(&'a self, canonical: &'a str) -> impl Iterator<Item = &'a str> {
        std::iter::once(canonical).chain(
            self.aliases
                .get(canonical)
                .into_iter()
                .flatten()
                .map(String::as_str),
        )
    }

    /// Column of `ds` holding `canonical`. When several spellings are present
    /// the numeric (non-ternary) representation wins, then the earliest
    /// spelling.
    pub fn locate(&self, ds: &Dataset, canonical: &str) -> Option<usize> {
        let candidates: Vec<usize> = self
            .spellings(canonical)
            .filter_map(|name| ds.feature_index(name))
            .collect();
        let is_numeric = |j: usize| {
            ds.samples
                .iter()
                .any(|s| ![-1.0, 0.0, 1.0].contains(&s.features[j]))
        };
        candidates
            .iter()
            .copied()
            .find(|&j| is_numeric(j))
            .or_else(|| candidates.first().copied())
    }
}

/// Restricts every dataset to `keep`, in that order, unifying aliased
/// column names. Samples are not re-deduplicated.
pub fn align_features(datasets: &[Dataset], keep: &[String]) -> Result<Vec<Dataset>> {
    align_with(datasets, keep, &AliasTable::bundled())
}

pub(crate) fn align_with(datasets: &[Dataset], keep: &[String], table: &AliasTable) -> Result<Vec<Dataset>> {
    datasets
        .iter()
        .map(|ds| {
            let columns = keep
                .iter()
                .map(|name| {
                    table.locate(ds, name).ok_or_else(|| Error::UnmappableFeature {
                        dataset: ds.name.clone(),
                        feature: name.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let samples = ds
                .samples
                .iter()
                .map(|s| Sample {
                    features: columns.iter().map(|&j| s.features[j]).collect(),
                    label: s.label,
                    provenance: s.provenance,
                })
                .collect();
            Dataset::new(ds.name.clone(), keep.to_vec(), samples)
        })
        .collect()
}
