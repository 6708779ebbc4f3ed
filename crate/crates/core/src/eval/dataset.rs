use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::DatasetError;
use crate::sketch::TaskKind;

/// One gold-labelled example. Relation (task 2) items carry the drug and
/// effect spans; sentence (task 1) items carry neither.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drug: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<String>,
    pub label: u8,
}

impl DatasetItem {
    pub fn sentence(id: impl Into<String>, text: impl Into<String>, label: u8) -> Self {
        DatasetItem {
            id: id.into(),
            text: text.into(),
            drug: None,
            effect: None,
            label,
        }
    }

    pub fn relation(
        id: impl Into<String>,
        text: impl Into<String>,
        drug: impl Into<String>,
        effect: impl Into<String>,
        label: u8,
    ) -> Self {
        DatasetItem {
            id: id.into(),
            text: text.into(),
            drug: Some(drug.into()),
            effect: Some(effect.into()),
            label,
        }
    }
}

fn schema(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema {
        line,
        message: message.into(),
    }
}

fn string_field(
    obj: &Map<String, Value>,
    key: &str,
    line: usize,
) -> Result<Option<String>, DatasetError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(schema(
            line,
            format!("\"{key}\" must be a string, got {other}"),
        )),
    }
}

fn parse_item(raw: &str, line: usize, task: TaskKind) -> Result<DatasetItem, DatasetError> {
    let value: Value =
        serde_json::from_str(raw).map_err(|e| schema(line, format!("invalid JSON: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(schema(line, "expected a JSON object"));
    };
    let id = string_field(&obj, "id", line)?.ok_or_else(|| schema(line, "missing \"id\""))?;
    if id.is_empty() {
        return Err(schema(line, "\"id\" is empty"));
    }
    let text = string_field(&obj, "text", line)?.ok_or_else(|| schema(line, "missing \"text\""))?;
    let label = match obj.get("label") {
        None => return Err(schema(line, "missing \"label\"")),
        Some(v) => match v.as_u64() {
            Some(l @ (0 | 1)) => l as u8,
            _ => return Err(schema(line, format!("\"label\" must be 0 or 1, got {v}"))),
        },
    };
    let drug = string_field(&obj, "drug", line)?;
    let effect = string_field(&obj, "effect", line)?;
    match task {
        TaskKind::Relation => {
            for (key, v) in [("drug", &drug), ("effect", &effect)] {
                match v {
                    None => return Err(schema(line, format!("missing \"{key}\""))),
                    Some(s) if s.trim().is_empty() => {
                        return Err(schema(line, format!("\"{key}\" is empty")))
                    }
                    Some(_) => {}
                }
            }
        }
        TaskKind::Sentence => {
            if drug.is_some() || effect.is_some() {
                return Err(schema(line, "task 1 items carry no \"drug\" or \"effect\""));
            }
        }
    }
    Ok(DatasetItem {
        id,
        text,
        drug,
        effect,
        label,
    })
}

/// Parses JSONL dataset text. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn parse_dataset(source: &str, task: TaskKind) -> Result<Vec<DatasetItem>, DatasetError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in source.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let item = parse_item(raw, i + 1, task)?;
        if !seen.insert(item.id.clone()) {
            return Err(schema(i + 1, format!("duplicate id \"{}\"", item.id)));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn load_dataset(path: &Path, task: TaskKind) -> Result<Vec<DatasetItem>, DatasetError> {
    parse_dataset(&fs::read_to_string(path)?, task)
}
