use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetItem;
use crate::error::{DatasetError, StatsError};
use crate::store::ExecutionTrace;

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub label: u8,
    #[serde(default)]
    pub evidence: Vec<String>,
    #[serde(default)]
    pub invalid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ExecutionTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    /// An item that produced no answer; scored as an invalid 0.
    pub fn failed(id: String, error: String) -> Self {
        PredictionRecord {
            id,
            label: 0,
            evidence: Vec::new(),
            invalid: true,
            trace: None,
            raw: None,
            error: Some(error),
        }
    }

    /// Label used for metrics: invalid records count as 0.
    pub fn scored_label(&self) -> u8 {
        if self.invalid {
            0
        } else {
            self.label
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub method: String,
    pub model: String,
    pub records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(
        source: &str,
        method: impl Into<String>,
        model: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let mut records = Vec::new();
        for (i, line) in source.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: PredictionRecord =
                serde_json::from_str(line).map_err(|e| DatasetError::Schema {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if record.label > 1 {
                return Err(DatasetError::Schema {
                    line: i + 1,
                    message: format!("label must be 0 or 1, got {}", record.label),
                });
            }
            records.push(record);
        }
        Ok(PredictionSet {
            method: method.into(),
            model: model.into(),
            records,
        })
    }

    pub fn read_jsonl(
        path: &Path,
        method: impl Into<String>,
        model: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        Self::parse_jsonl(&fs::read_to_string(path)?, method, model)
    }

    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_jsonl())
    }

    pub fn invalid_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.invalid).count() as f64 / self.records.len() as f64
    }

    pub fn error_count(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Gold and scored predicted labels in gold order. The two id sets must be
/// identical; otherwise every offending id is reported.
pub fn align(
    gold: &[DatasetItem],
    predictions: &PredictionSet,
) -> Result<(Vec<u8>, Vec<u8>), StatsError> {
    let mut by_id: HashMap<&str, &PredictionRecord> =
        HashMap::with_capacity(predictions.records.len());
    let mut offenders = BTreeSet::new();
    for r in &predictions.records {
        if by_id.insert(r.id.as_str(), r).is_some() {
            offenders.insert(r.id.clone());
        }
    }
    let mut gold_labels = Vec::with_capacity(gold.len());
    let mut pred_labels = Vec::with_capacity(gold.len());
    for item in gold {
        match by_id.remove(item.id.as_str()) {
            Some(r) => {
                gold_labels.push(item.label);
                pred_labels.push(r.scored_label());
            }
            None => {
                offenders.insert(item.id.clone());
            }
        }
    }
    offenders.extend(by_id.keys().map(|k| k.to_string()));
    if !offenders.is_empty() {
        return Err(StatsError::IdMismatch(offenders.into_iter().collect()));
    }
    Ok((gold_labels, pred_labels))
}
