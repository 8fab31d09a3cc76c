//! Phishing URL detection toolkit.
//!
//! * [`features`] parses URLs into the 23-feature canonical vector.
//! * [`datasets`] ingests, deduplicates and aligns labelled tables and
//!   synthesizes phishing-like URLs.
//! * [`learners`] trains linear models, trees, forests, boosted trees and an
//!   MLP behind one probability scorer.
//! * [`metrics`] computes confusion statistics, ROC/AUC and cross-validation.
//! * [`explain`] provides information gain, Shapley values, LIME and the
//!   fused feature weights.
//! * [`mcp`] serves analysis tools over line-delimited JSON with per-request
//!   context isolation and provenance scoring.
//! * [`robustness`] attacks context stores and scores CIS, APF, CSI and MRE.

pub mod bundled;
pub mod datasets;
pub mod error;
pub mod explain;
pub mod features;
pub mod learners;
pub mod mcp;
pub mod metrics;
pub mod robustness;

pub use error::{Error, Result};
