//! Confusion statistics, ROC/AUC and stratified cross-validation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::{label_for, stratified_folds, Scorer};

/// Class 1 (phishing) is the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    check_lengths(labels.len(), predictions.len())?;
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y != 0, p != 0) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when any ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

pub fn prf1(cm: &ConfusionMatrix) -> Prf1 {
    let mut degenerate = false;
    let mut ratio = |num: f64, den: f64| {
        if den == 0.0 {
            degenerate = true;
            0.0
        } else {
            num / den
        }
    };
    let accuracy = ratio((cm.tp + cm.tn) as f64, cm.total() as f64);
    let precision = ratio(cm.tp as f64, (cm.tp + cm.fp) as f64);
    let recall = ratio(cm.tp as f64, (cm.tp + cm.fn_) as f64);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    Prf1 {
        accuracy,
        precision,
        recall,
        f1,
        degenerate,
    }
}

/// Points ordered by descending threshold. `thresholds[0]` is +∞ for the
/// (0, 0) origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub thresholds: Vec<f64>,
}

/// Sorted (score, label) pairs, highest score first.
fn ranked(labels: &[u8], scores: &[f64]) -> Result<Vec<(f64, u8)>> {
    check_lengths(labels.len(), scores.len())?;
    let mut pairs: Vec<(f64, u8)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(pairs)
}

/// ROC over every distinct score; tied scores move together, producing a
/// diagonal segment. AUC is the trapezoid area under the curve.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<(RocCurve, f64)> {
    let pairs = ranked(labels, scores)?;
    let pos = labels.iter().filter(|&&y| y != 0).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::SingleClassInput);
    }
    let mut curve = RocCurve {
        fpr: vec![0.0],
        tpr: vec![0.0],
        thresholds: vec![f64::INFINITY],
    };
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut auc = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            if pairs[i].1 != 0 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let (x0, y0) = (*curve.fpr.last().unwrap(), *curve.tpr.last().unwrap());
        let (x1, y1) = (fp / neg, tp / pos);
        auc += (x1 - x0) * (y0 + y1) / 2.0;
        curve.fpr.push(x1);
        curve.tpr.push(y1);
        curve.thresholds.push(t);
    }
    Ok((curve, auc))
}

/// (threshold, precision, recall) at every distinct score, highest first.
pub fn pr_curve(labels: &[u8], scores: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let pairs = ranked(labels, scores)?;
    let pos = labels.iter().filter(|&&y| y != 0).count() as f64;
    let mut out = Vec::new();
    let (mut tp, mut seen) = (0.0, 0.0);
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            tp += f64::from(pairs[i].1);
            seen += 1.0;
            i += 1;
        }
        let recall = if pos > 0.0 { tp / pos } else { 0.0 };
        out.push((t, tp / seen, recall));
    }
    Ok(out)
}

/// One row of the Accuracy / Precision / Recall / F1 / ROC AUC table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// None when the evaluated set holds a single class.
    pub roc_auc: Option<f64>,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Accuracy => Some(self.accuracy),
            Metric::Precision => Some(self.precision),
            Metric::Recall => Some(self.recall),
            Metric::F1 => Some(self.f1),
            Metric::RocAuc => self.roc_auc,
        }
    }

    /// Column-wise mean; AUC averages over the reports that have one.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let aucs: Vec<f64> = reports.iter().filter_map(|r| r.roc_auc).collect();
        Some(MetricsReport {
            accuracy: avg(|r| r.accuracy),
            precision: avg(|r| r.precision),
            recall: avg(|r| r.recall),
            f1: avg(|r| r.f1),
            roc_auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
        })
    }
}

/// Aligned plain-text table, one row per named report.
pub fn format_table(rows: &[(String, MetricsReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("Model".len());
    let mut out = format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "Model", "Accuracy", "Precision", "Recall", "F1", "ROC AUC"
    );
    for (name, r) in rows {
        let auc = r.roc_auc.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            out,
            "{name:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}  {auc:>9}",
            r.accuracy, r.precision, r.recall, r.f1
        );
    }
    out
}

/// Scores every sample of `ds` and summarizes against its labels.
pub fn evaluate<S: Scorer + ?Sized>(scorer: &S, ds: &Dataset) -> Result<MetricsReport> {
    let labels = ds.labels();
    let scores: Vec<f64> = ds.samples.par_iter().map(|s| scorer.score(&s.features)).collect();
    report_from_scores(&labels, &scores)
}

pub fn report_from_scores(labels: &[u8], scores: &[f64]) -> Result<MetricsReport> {
    let predictions: Vec<u8> = scores.iter().map(|&p| label_for(p)).collect();
    let m = prf1(&confusion(labels, &predictions)?);
    let roc_auc = match roc_auc(labels, scores) {
        Ok((_, auc)) => Some(auc),
        Err(Error::SingleClassInput) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        roc_auc,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
    RocAuc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `scores`.
    pub std: f64,
}

impl CvResult {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let n = scores.len().max(1) as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self { scores, mean, std }
    }
}

/// Trains on each fold complement and reports every held-out fold. Folds
/// run concurrently; errors carry the fold index.
pub fn cross_validate_reports<T, S>(trainer: T, ds: &Dataset, k: usize, seed: u64) -> Result<Vec<MetricsReport>>
where
    T: Fn(&Dataset) -> Result<S> + Sync,
    S: Scorer,
{
    let folds = stratified_folds(&ds.labels(), k, seed)?;
    (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let model = trainer(&ds.subset(&train)).map_err(|e| e.in_fold(f))?;
            evaluate(&model, &ds.subset(&folds[f])).map_err(|e| e.in_fold(f))
        })
        .collect()
}

pub fn cross_validate<T, S>(trainer: T, ds: &Dataset, metric: Metric, k: usize, seed: u64) -> Result<CvResult>
where
    T: Fn(&Dataset) -> Result<S> + Sync,
    S: Scorer,
{
    let reports = cross_validate_reports(trainer, ds, k, seed)?;
    let scores = reports
        .iter()
        .enumerate()
        .map(|(f, r)| r.get(metric).ok_or_else(|| Error::SingleClassInput.in_fold(f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CvResult::from_scores(scores))
}
