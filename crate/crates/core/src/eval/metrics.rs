use std::fmt;

use serde::{Deserialize, Serialize};

use super::{align, DatasetItem, PredictionSet};
use crate::error::StatsError;

/// Binary confusion counts with 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion_counts(gold: &[u8], pred: &[u8]) -> Result<ConfusionCounts, StatsError> {
    if gold.len() != pred.len() {
        return Err(StatsError::InvalidArgument(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&g, &p) in gold.iter().zip(pred) {
        match (g == 1, p == 1) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Confusion of a prediction set against gold items, matched by id.
pub fn confusion(
    gold: &[DatasetItem],
    predictions: &PredictionSet,
) -> Result<ConfusionCounts, StatsError> {
    let (g, p) = align(gold, predictions)?;
    confusion_counts(&g, &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Undefined ratios (no predicted or no gold positives) are reported as 0.
pub fn metrics(c: &ConfusionCounts) -> Result<Metrics, StatsError> {
    let n = c.total();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Ok(Metrics {
        accuracy: ratio(c.tp + c.tn, n),
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::Accuracy,
        Statistic::Precision,
        Statistic::Recall,
        Statistic::F1,
    ];

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Statistic::Accuracy => m.accuracy,
            Statistic::Precision => m.precision,
            Statistic::Recall => m.recall,
            Statistic::F1 => m.f1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Accuracy => "accuracy",
            Statistic::Precision => "precision",
            Statistic::Recall => "recall",
            Statistic::F1 => "f1",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
