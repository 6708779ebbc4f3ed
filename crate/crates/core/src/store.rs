//! Typed variable store and execution trace.
//!
//! A [`VariableStore`] holds one value per declared variable, starting from the
//! declared default. Conditions update it through [`VariableStore::apply_update`],
//! which appends exactly one [`TraceEvent`] to the [`ExecutionTrace`] whether or
//! not the condition fired.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::condition::{Capture, ConditionOutcome};
use crate::error::StoreError;

/// Supported variable datatypes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Datatype {
    Boolean,
    Integer,
    Float,
    Enum(Vec<String>),
}

impl Datatype {
    /// Builds an enum type, rejecting empty or duplicated value sets.
    pub fn enumeration<I, S>(symbols: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(StoreError::EmptyEnum);
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(StoreError::DuplicateEnumSymbol(s.clone()));
            }
        }
        Ok(Datatype::Enum(symbols))
    }

    pub fn is_boolean(&self) -> bool {
        matches!(self, Datatype::Boolean)
    }

    pub fn accepts(&self, value: &Value) -> bool {
        match (self, value) {
            (Datatype::Boolean, Value::Bool(_)) => true,
            (Datatype::Integer, Value::Int(_)) => true,
            (Datatype::Float, Value::Float(x)) => x.is_finite(),
            (Datatype::Enum(set), Value::Symbol(s)) => set.iter().any(|m| m == s),
            _ => false,
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datatype::Boolean => f.write_str("bool"),
            Datatype::Integer => f.write_str("int"),
            Datatype::Float => f.write_str("float"),
            Datatype::Enum(set) => write!(f, "enum{{{}}}", set.join(", ")),
        }
    }
}

/// A variable value. Floats admitted into a store are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Symbol(String),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Symbol(_) => "symbol",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub datatype: Datatype,
    pub default: Value,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, datatype: Datatype, default: Value) -> Self {
        VariableSpec {
            name: name.into(),
            datatype,
            default,
        }
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        Self::new(name, Datatype::Boolean, Value::Bool(false))
    }
}

/// How a triggered condition changes its target variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    /// Boolean target becomes `true` and stays there for the rest of the run.
    LatchTrue,
    /// Target takes the value of the condition's first capture.
    AssignCapture,
}

impl UpdateKind {
    /// The update kind a condition targeting `datatype` uses.
    pub fn for_datatype(datatype: &Datatype) -> Self {
        if datatype.is_boolean() {
            UpdateKind::LatchTrue
        } else {
            UpdateKind::AssignCapture
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub var: String,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub condition: String,
    pub triggered: bool,
    pub captures: Vec<Capture>,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
}

impl ExecutionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn triggered(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.triggered)
    }
}

/// Immutable `(name, value)` pairs in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FinalState {
    values: IndexMap<String, Value>,
}

impl FinalState {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(String, Value)> for FinalState {
    fn from_iter<T: IntoIterator<Item = (String, Value)>>(iter: T) -> Self {
        FinalState {
            values: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableStore {
    slots: IndexMap<String, (VariableSpec, Value)>,
}

impl VariableStore {
    /// Initializes every variable to its default, in declaration order.
    pub fn init(specs: &[VariableSpec]) -> Result<Self, StoreError> {
        let mut slots = IndexMap::with_capacity(specs.len());
        for spec in specs {
            if let Datatype::Enum(set) = &spec.datatype {
                Datatype::enumeration(set.iter().cloned())?;
            }
            if !spec.datatype.accepts(&spec.default) {
                return Err(StoreError::TypeMismatch {
                    variable: spec.name.clone(),
                    expected: spec.datatype.to_string(),
                    found: spec.default.to_string(),
                });
            }
            if slots.contains_key(&spec.name) {
                return Err(StoreError::DuplicateVariable(spec.name.clone()));
            }
            slots.insert(spec.name.clone(), (spec.clone(), spec.default.clone()));
        }
        Ok(VariableStore { slots })
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.slots.get(name).map(|(_, v)| v)
    }

    pub fn spec(&self, name: &str) -> Option<&VariableSpec> {
        self.slots.get(name).map(|(s, _)| s)
    }

    /// Applies a condition outcome to `target` and records it in `trace`.
    ///
    /// A non-triggered outcome leaves the store untouched but still appends an
    /// event. On error neither the store nor the trace is modified.
    pub fn apply_update(
        &mut self,
        trace: &mut ExecutionTrace,
        condition_id: &str,
        outcome: &ConditionOutcome,
        target: &str,
        kind: UpdateKind,
    ) -> Result<(), StoreError> {
        let (spec, current) = self
            .slots
            .get_mut(target)
            .ok_or_else(|| StoreError::UnknownVariable(target.to_string()))?;

        let mut updates = Vec::new();
        if outcome.triggered {
            let new =
                match kind {
                    UpdateKind::LatchTrue => {
                        if !spec.datatype.is_boolean() {
                            return Err(StoreError::TypeMismatch {
                                variable: target.to_string(),
                                expected: "bool".into(),
                                found: spec.datatype.to_string(),
                            });
                        }
                        Value::Bool(true)
                    }
                    UpdateKind::AssignCapture => {
                        let capture = outcome.captures.first().ok_or_else(|| {
                            StoreError::CaptureMismatch {
                                variable: target.to_string(),
                                condition: condition_id.to_string(),
                                detail: "no capture to assign".into(),
                            }
                        })?;
                        capture_value(&spec.datatype, capture).ok_or_else(|| {
                            StoreError::CaptureMismatch {
                                variable: target.to_string(),
                                condition: condition_id.to_string(),
                                detail: format!("{capture} does not fit {}", spec.datatype),
                            }
                        })?
                    }
                };
            let old = std::mem::replace(current, new.clone());
            updates.push(Update {
                var: target.to_string(),
                old,
                new,
            });
        }

        let step = trace.events.last().map_or(0, |e| e.step + 1);
        trace.events.push(TraceEvent {
            step,
            condition: condition_id.to_string(),
            triggered: outcome.triggered,
            captures: outcome.captures.clone(),
            updates,
        });
        Ok(())
    }

    /// Reapplies the updates recorded in `trace` to this store.
    pub fn replay(&mut self, trace: &ExecutionTrace) -> Result<(), StoreError> {
        for update in trace.events.iter().flat_map(|e| &e.updates) {
            let (spec, current) = self
                .slots
                .get_mut(&update.var)
                .ok_or_else(|| StoreError::UnknownVariable(update.var.clone()))?;
            if !spec.datatype.accepts(&update.new) {
                return Err(StoreError::TypeMismatch {
                    variable: update.var.clone(),
                    expected: spec.datatype.to_string(),
                    found: format!("{} {}", update.new.kind(), update.new),
                });
            }
            *current = update.new.clone();
        }
        Ok(())
    }

    pub fn snapshot(&self) -> FinalState {
        self.slots
            .iter()
            .map(|(name, (_, v))| (name.clone(), v.clone()))
            .collect()
    }
}

fn capture_value(datatype: &Datatype, capture: &Capture) -> Option<Value> {
    match (datatype, capture) {
        (Datatype::Float, Capture::Number { value: x })
        | (Datatype::Float, Capture::Similarity { score: x }) => {
            x.is_finite().then_some(Value::Float(*x))
        }
        (Datatype::Integer, Capture::Number { value: x }) => {
            let fits = x.fract() == 0.0 && x.abs() < 9.0e15;
            fits.then_some(Value::Int(*x as i64))
        }
        (Datatype::Enum(set), Capture::Keyword { text })
        | (Datatype::Enum(set), Capture::Span { text, .. }) => {
            let wanted = text.trim().to_lowercase();
            set.iter()
                .find(|s| s.to_lowercase() == wanted)
                .map(|s| Value::Symbol(s.clone()))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fired(captures: Vec<Capture>) -> ConditionOutcome {
        ConditionOutcome {
            triggered: true,
            captures,
        }
    }

    #[test]
    fn init_sets_defaults_in_declaration_order() {
        let specs = vec![
            VariableSpec::new("dose", Datatype::Float, Value::Float(0.0)),
            VariableSpec::new(
                "route",
                Datatype::enumeration(["oral", "iv"]).unwrap(),
                Value::Symbol("oral".into()),
            ),
        ];
        let store = VariableStore::init(&specs).unwrap();
        let snap = store.snapshot();
        let names: Vec<_> = snap.iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["dose", "route"]);
        assert_eq!(snap.get("dose"), Some(&Value::Float(0.0)));
        assert_eq!(snap.get("route"), Some(&Value::Symbol("oral".into())));
    }

    #[test]
    fn init_boolean_default() {
        let store = VariableStore::init(&[VariableSpec::boolean("drug")]).unwrap();
        assert_eq!(store.get("drug"), Some(&Value::Bool(false)));
    }

    #[test]
    fn init_rejects_mismatched_default() {
        let specs = [VariableSpec::new(
            "x",
            Datatype::Integer,
            Value::Symbol("oral".into()),
        )];
        let err = VariableStore::init(&specs).unwrap_err();
        assert!(matches!(err, StoreError::TypeMismatch { ref variable, .. } if variable == "x"));
    }

    #[test]
    fn init_rejects_duplicates_and_bad_enums() {
        let dup = [VariableSpec::boolean("a"), VariableSpec::boolean("a")];
        assert!(matches!(
            VariableStore::init(&dup),
            Err(StoreError::DuplicateVariable(n)) if n == "a"
        ));
        assert!(Datatype::enumeration(Vec::<String>::new()).is_err());
        assert!(Datatype::enumeration(["a", "a"]).is_err());
        let nan = [VariableSpec::new(
            "f",
            Datatype::Float,
            Value::Float(f64::NAN),
        )];
        assert!(VariableStore::init(&nan).is_err());
    }

    #[test]
    fn latch_records_transition() {
        let mut store = VariableStore::init(&[VariableSpec::boolean("drug")]).unwrap();
        let mut trace = ExecutionTrace::new();
        let outcome = fired(vec![Capture::Span {
            start: 0,
            end: 3,
            text: "abc".into(),
        }]);
        store
            .apply_update(&mut trace, "drug", &outcome, "drug", UpdateKind::LatchTrue)
            .unwrap();
        assert_eq!(store.get("drug"), Some(&Value::Bool(true)));
        assert_eq!(
            trace.events[0].updates,
            vec![Update {
                var: "drug".into(),
                old: Value::Bool(false),
                new: Value::Bool(true)
            }]
        );
    }

    #[test]
    fn untriggered_is_identity_but_traced() {
        let mut store = VariableStore::init(&[VariableSpec::boolean("drug")]).unwrap();
        let mut trace = ExecutionTrace::new();
        store
            .apply_update(
                &mut trace,
                "c0",
                &fired(vec![]),
                "drug",
                UpdateKind::LatchTrue,
            )
            .unwrap();
        store
            .apply_update(
                &mut trace,
                "c1",
                &ConditionOutcome::not_triggered(),
                "drug",
                UpdateKind::LatchTrue,
            )
            .unwrap();
        assert_eq!(store.get("drug"), Some(&Value::Bool(true)));
        assert_eq!(trace.len(), 2);
        assert!(!trace.events[1].triggered);
        assert!(trace.events[1].updates.is_empty());
        assert_eq!(trace.events[1].step, 1);
    }

    #[test]
    fn assign_numeric_capture() {
        let specs = [VariableSpec::new(
            "dose",
            Datatype::Float,
            Value::Float(0.0),
        )];
        let mut store = VariableStore::init(&specs).unwrap();
        let mut trace = ExecutionTrace::new();
        store
            .apply_update(
                &mut trace,
                "dose",
                &fired(vec![Capture::Number { value: 500.0 }]),
                "dose",
                UpdateKind::AssignCapture,
            )
            .unwrap();
        assert_eq!(store.get("dose"), Some(&Value::Float(500.0)));
    }

    #[test]
    fn assign_errors_leave_state_untouched() {
        let specs = [
            VariableSpec::new("n", Datatype::Integer, Value::Int(0)),
            VariableSpec::new(
                "route",
                Datatype::enumeration(["oral", "iv"]).unwrap(),
                Value::Symbol("oral".into()),
            ),
        ];
        let mut store = VariableStore::init(&specs).unwrap();
        let mut trace = ExecutionTrace::new();
        let frac = fired(vec![Capture::Number { value: 2.5 }]);
        assert!(store
            .apply_update(&mut trace, "c", &frac, "n", UpdateKind::AssignCapture)
            .is_err());
        let unknown = fired(vec![Capture::Keyword { text: "im".into() }]);
        assert!(store
            .apply_update(
                &mut trace,
                "c",
                &unknown,
                "route",
                UpdateKind::AssignCapture
            )
            .is_err());
        assert!(store
            .apply_update(&mut trace, "c", &frac, "ghost", UpdateKind::LatchTrue)
            .is_err());
        assert!(trace.is_empty());

        let iv = fired(vec![Capture::Keyword { text: "IV".into() }]);
        store
            .apply_update(&mut trace, "c", &iv, "route", UpdateKind::AssignCapture)
            .unwrap();
        assert_eq!(store.get("route"), Some(&Value::Symbol("iv".into())));
    }

    #[test]
    fn snapshots_are_pure() {
        let store = VariableStore::init(&[VariableSpec::boolean("a")]).unwrap();
        assert_eq!(store.snapshot(), store.snapshot());
    }

    #[test]
    fn trace_serializes_with_wire_field_names() {
        let mut store = VariableStore::init(&[VariableSpec::boolean("drug")]).unwrap();
        let mut trace = ExecutionTrace::new();
        store
            .apply_update(
                &mut trace,
                "drug",
                &fired(vec![Capture::Keyword {
                    text: "amoxicillin".into(),
                }]),
                "drug",
                UpdateKind::LatchTrue,
            )
            .unwrap();
        let json = serde_json::to_string(&trace).unwrap();
        assert_eq!(
            json,
            r#"[{"step":0,"condition":"drug","triggered":true,"captures":[{"kind":"keyword","text":"amoxicillin"}],"updates":[{"var":"drug","old":false,"new":true}]}]"#
        );
    }
}
