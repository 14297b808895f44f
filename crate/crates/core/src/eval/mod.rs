//! Metrics for the positive class, stratified cross-validation, the
//! top/bottom baseline selection strategies and the misclassification report
//! that drives lexicon refinement.

mod baseline;
mod cv;
mod refine;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Class, Error, Result};

pub use baseline::{baseline_bottom, baseline_top, selection_size, Dimension};
pub use cv::{cross_validate, stratified_folds, CvReport};
pub use refine::{
    misclassification_report, MisclassificationReport, Misclassified, NgramCount, RefineConfig,
};

/// Binary confusion counts; positive class is [`Class::True`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Class, truth: Class) {
        match (predicted, truth) {
            (Class::True, Class::True) => self.tp += 1,
            (Class::True, Class::False) => self.fp += 1,
            (Class::False, Class::True) => self.fn_ += 1,
            (Class::False, Class::False) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

pub fn confusion(predictions: &[Class], truth: &[Class]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::input(format!(
            "{} predictions but {} truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        m.record(p, t);
    }
    Ok(m)
}

/// Precision, recall and F1 for the positive class. A metric whose
/// denominator is zero is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub matrix: ConfusionMatrix,
}

pub fn precision_recall(m: &ConfusionMatrix, strategy: impl Into<String>) -> EvalReport {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    EvalReport {
        strategy: strategy.into(),
        precision,
        recall,
        f1,
        matrix: *m,
    }
}

/// One CSV row per report: strategy, precision, recall, f1, tp, fp, fn, tn.
/// Undefined metrics are written as empty cells.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        "strategy",
        "precision",
        "recall",
        "f1",
        "tp",
        "fp",
        "fn",
        "tn",
    ])
    .map_err(io)?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.strategy.clone(),
            cell(r.precision),
            cell(r.recall),
            cell(r.f1),
            r.matrix.tp.to_string(),
            r.matrix.fp.to_string(),
            r.matrix.fn_.to_string(),
            r.matrix.tn.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
