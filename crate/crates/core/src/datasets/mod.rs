//! Labelled datasets: ingestion, deduplication, alignment and synthesis.

mod align;
mod ingest;
pub mod synth;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::{align_features, AliasTable};
pub use ingest::{load_csv, load_table, parse_csv, IngestReport};
pub use synth::{
    feature_report, generate_feature_rich_domains, generate_synthetic_urls, FeatureReport,
    GenerationConfig, Rule,
};

/// Origin of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "UCI")]
    Uci,
    OpenPhish,
    EvilGinx,
    GenAI,
    Unknown,
}

impl Provenance {
    pub const ALL: [Provenance; 5] = [
        Provenance::Uci,
        Provenance::OpenPhish,
        Provenance::EvilGinx,
        Provenance::GenAI,
        Provenance::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Uci => "UCI",
            Provenance::OpenPhish => "OpenPhish",
            Provenance::EvilGinx => "EvilGinx",
            Provenance::GenAI => "GenAI",
            Provenance::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown provenance {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    /// 0 legitimate, 1 phishing.
    pub label: u8,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub samples: Vec<Sample>,
}

fn row_key(sample: &Sample) -> Vec<u64> {
    sample
        .features
        .iter()
        .map(|v| if *v == 0.0 { 0u64 } else { v.to_bits() })
        .chain(std::iter::once(sample.label as u64))
        .collect()
}

impl Dataset {
    pub fn new(name: impl Into<String>, feature_names: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        let n = feature_names.len();
        if let Some(bad) = samples.iter().find(|s| s.features.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.features.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|s| s.label > 1) {
            return Err(Error::InvalidConfig(format!("label {} not in {{0, 1}}", bad.label)));
        }
        Ok(Self {
            name: name.into(),
            feature_names,
            samples,
        })
    }

    /// Builds a dataset from feature rows and labels with one provenance.
    pub fn from_rows(
        name: impl Into<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
        provenance: Provenance,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: rows.len(),
            });
        }
        let samples = rows
            .into_iter()
            .zip(labels)
            .map(|(features, label)| Sample {
                features,
                label,
                provenance,
            })
            .collect();
        Self::new(name, feature_names, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.features.as_slice()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[j]).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// (legitimate count, phishing count).
    pub fn class_distribution(&self) -> (usize, usize) {
        let phishing = self.samples.iter().filter(|s| s.label == 1).count();
        (self.samples.len() - phishing, phishing)
    }

    pub fn has_both_classes(&self) -> bool {
        let (neg, pos) = self.class_distribution();
        neg > 0 && pos > 0
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Concatenates datasets sharing a feature list.
    pub fn concat(name: impl Into<String>, parts: &[Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        let mut samples = Vec::new();
        for part in parts {
            if part.feature_names != first.feature_names {
                return Err(Error::InvalidConfig(format!(
                    "dataset {:?} has a different feature list",
                    part.name
                )));
            }
            samples.extend(part.samples.iter().cloned());
        }
        Dataset::new(name, first.feature_names.clone(), samples)
    }

    /// Removes exact duplicate (features, label) rows, keeping first
    /// occurrences. Returns the number removed.
    pub fn dedup(&mut self) -> usize {
        let before = self.samples.len();
        let mut seen = HashSet::with_capacity(before);
        self.samples.retain(|s| seen.insert(row_key(s)));
        before - self.samples.len()
    }

    /// CSV text: header of feature names then `label`, one sample per row.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = self.feature_names.clone();
        header.push("label".to_string());
        writer.write_record(&header)?;
        for s in &self.samples {
            let mut record: Vec<String> = s.features.iter().map(|v| format_value(*v)).collect();
            record.push(s.label.to_string());
            writer.write_record(&record)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Integer-valued cells print without a fractional part.
pub(crate) fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
