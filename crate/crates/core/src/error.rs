use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` expects {expected}, got {found}")]
    TypeMismatch {
        variable: String,
        expected: String,
        found: String,
    },
    #[error("condition `{condition}` cannot assign variable `{variable}`: {detail}")]
    CaptureMismatch {
        variable: String,
        condition: String,
        detail: String,
    },
    #[error("enum value set is empty")]
    EmptyEnum,
    #[error("enum value set repeats `{0}`")]
    DuplicateEnumSymbol(String),
}

/// A semantic scorer could not produce a score.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ScorerError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("condition `{condition}`: scorer failed: {source}")]
    Scorer {
        condition: String,
        #[source]
        source: ScorerError,
    },
    #[error("condition `{condition}`: {detail}")]
    Condition { condition: String, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("unbound placeholder {0}")]
    UnboundPlaceholder(String),
    #[error("validator: {0}")]
    Validator(String),
}

/// A located problem in a sketch document. Lines and columns are 1-based;
/// column 0 means "whole line".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Non-empty list of diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty evaluation set")]
    Empty,
    #[error("prediction ids do not match gold ids: {}", .0.join(", "))]
    IdMismatch(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("empty sentence")]
    EmptySentence,
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("example pair must be one positive (label 1) and one negative (label 0) instance")]
    ExampleLabels,
    #[error("relation prompt requires drug and effect")]
    MissingSpans,
    #[error("checklist prompts are compiled from a sketch")]
    MissingSketch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("prompt carries no instance marker")]
    MissingMarker,
    #[error("backend: {0}")]
    Backend(String),
}

impl InferenceError {
    pub fn is_transport(&self) -> bool {
        matches!(self, InferenceError::Transport { .. })
    }
}
