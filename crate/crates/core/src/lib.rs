//! Logic sketches: typed variables, deterministic condition evaluators and
//! rule-based validators for auditable text classification.
//!
//! A sketch document declares variables, the conditions that update them and a
//! validator over their final values. Sketches run directly over text
//! ([`sketch::run_sketch`]), compile into prompts for language models
//! ([`prompt`]), and feed an evaluation harness ([`eval`]) with bootstrap
//! intervals and McNemar comparisons.

pub mod condition;
pub mod error;
pub mod eval;
pub mod inference;
pub mod prompt;
pub mod sketch;
pub mod store;
pub mod validator;

pub use condition::{
    Capture, ConditionOutcome, ConditionSpec, InputText, JaccardScorer, SemanticScorer,
};
pub use error::{
    Diagnostic, Diagnostics, EvalError, InferenceError, PromptError, StatsError, StoreError,
};
pub use eval::{DatasetItem, PredictionRecord, PredictionSet};
pub use inference::{Backend, DecodingConfig, ParsedPrediction};
pub use prompt::{RenderedPrompt, Strategy, TaskInstance};
pub use sketch::{parse_sketch, SketchDocument, SketchRunResult, TaskKind};
pub use store::{
    Datatype, ExecutionTrace, FinalState, TraceEvent, UpdateKind, Value, VariableSpec,
    VariableStore,
};
pub use validator::{BoolExpr, Label, Validator};
