//! Confusion-matrix accounting. Spam is the positive class.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spam,
    Ham,
}

impl Label {
    /// Network target under the bipolar activation.
    pub fn target(self) -> f64 {
        match self {
            Label::Spam => 1.0,
            Label::Ham => -1.0,
        }
    }

    /// Decision rule for a single bipolar output; a tie at 0 is spam.
    pub fn from_output(output: f64) -> Self {
        if output >= 0.0 {
            Label::Spam
        } else {
            Label::Ham
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spam => "spam",
            Label::Ham => "ham",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "spam" => Ok(Label::Spam),
            "ham" => Ok(Label::Ham),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{predictions} predictions for {truths} ground-truth labels")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no instances to evaluate")]
    Empty,
    #[error("{0} is undefined: the denominator {1} is zero")]
    Undefined(&'static str, &'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    /// The same matrix with ham treated as the positive class.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix { tp: self.tn, tn: self.tp, fp: self.fn_, fn_: self.fp }
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Spam, Label::Spam) => self.tp += 1,
            (Label::Ham, Label::Ham) => self.tn += 1,
            (Label::Spam, Label::Ham) => self.fp += 1,
            (Label::Ham, Label::Spam) => self.fn_ += 1,
        }
    }
}

pub fn tally(predictions: &[Label], truths: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch { predictions: predictions.len(), truths: truths.len() });
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        cm.record(p, t);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sensitivity: f64,
    pub specificity: f64,
    pub efficiency: f64,
    pub accuracy: f64,
    pub counts: ConfusionMatrix,
}

pub fn derive(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    if cm.positives() == 0 {
        return Err(MetricsError::Undefined("sensitivity", "TP + FN"));
    }
    if cm.negatives() == 0 {
        return Err(MetricsError::Undefined("specificity", "FP + TN"));
    }
    let sensitivity = cm.tp as f64 / cm.positives() as f64;
    let specificity = cm.tn as f64 / cm.negatives() as f64;
    Ok(MetricsReport {
        sensitivity,
        specificity,
        efficiency: (sensitivity + specificity) / 2.0,
        accuracy: (cm.tp + cm.tn) as f64 / cm.total() as f64,
        counts: *cm,
    })
}

impl MetricsReport {
    /// One row in the result-table column order, four decimals each, with the
    /// training time in seconds (three decimals) appended.
    pub fn table_row(&self, label: &str, training_seconds: f64) -> String {
        format!(
            "| {label} | {:.4} | {:.4} | {:.4} | {:.4} | {:.3} |",
            self.sensitivity, self.specificity, self.efficiency, self.accuracy, training_seconds
        )
    }
}
