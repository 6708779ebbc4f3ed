//! Whole sketch documents: parsing, placeholder binding and execution.

mod parse;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condition::{
    evaluate, ConditionFamily, ConditionSpec, InputText, Keyword, Pattern, SemanticScorer,
};
use crate::error::EvalError;
use crate::eval::{DatasetItem, PredictionRecord, PredictionSet};
use crate::prompt::TaskInstance;
use crate::store::{ExecutionTrace, FinalState, VariableSpec, VariableStore};
use crate::validator::{Label, Validator};

pub use parse::parse_sketch;

/// Placeholder tokens a relation sketch binds per instance.
pub const PLACEHOLDERS: [&str; 2] = ["DRUG", "EFFECT"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Task 1: does the sentence report an adverse event?
    Sentence,
    /// Task 2: does the sentence assert that a given drug caused a given effect?
    Relation,
}

impl TaskKind {
    pub fn from_number(task: u8) -> Option<Self> {
        match task {
            1 => Some(TaskKind::Sentence),
            2 => Some(TaskKind::Relation),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            TaskKind::Sentence => 1,
            TaskKind::Relation => 2,
        }
    }
}

/// How a variable appears in a rendered checklist prompt.
///
/// A `question` becomes a numbered checklist item. A `phrase` without a
/// question keeps the variable out of the checklist; the rule then refers to
/// it by the phrase (`no negation` for a negated phrase).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptHint {
    pub question: Option<String>,
    pub phrase: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SketchDocument {
    pub name: String,
    pub task: TaskKind,
    pub labels: Vec<Label>,
    pub variables: Vec<VariableSpec>,
    pub hints: IndexMap<String, PromptHint>,
    pub conditions: Vec<ConditionSpec>,
    pub validator: Validator,
    /// Placeholders used anywhere in the condition arguments.
    pub placeholders: Vec<String>,
    bound: bool,
}

impl SketchDocument {
    pub fn is_bound(&self) -> bool {
        self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SketchRunResult {
    pub label: Label,
    pub final_state: FinalState,
    pub trace: ExecutionTrace,
    pub evidence: Vec<String>,
}

/// Byte ranges of placeholder tokens. A token must not touch other word
/// characters, except that a regex escape such as `\b` may precede it.
fn placeholder_spans(text: &str) -> Vec<(usize, usize, &'static str)> {
    let bytes = text.as_bytes();
    let word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let Some(token) = PLACEHOLDERS
            .iter()
            .find(|p| bytes[i..].starts_with(p.as_bytes()))
        else {
            i += 1;
            continue;
        };
        let end = i + token.len();
        let before_ok = i == 0 || !word(bytes[i - 1]) || (i >= 2 && bytes[i - 2] == b'\\');
        let after_ok = end == bytes.len() || !word(bytes[end]);
        if before_ok && after_ok {
            spans.push((i, end, *token));
            i = end;
        } else {
            i += 1;
        }
    }
    spans
}

pub(crate) fn placeholders_in(text: &str) -> Vec<&'static str> {
    let mut found = Vec::new();
    for (_, _, p) in placeholder_spans(text) {
        if !found.contains(&p) {
            found.push(p);
        }
    }
    found
}

/// Replaces placeholders in one pass, so a drug name that itself contains
/// `EFFECT` is never substituted twice.
pub(crate) fn substitute(text: &str, drug: &str, effect: &str, escape: bool) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end, token) in placeholder_spans(text) {
        out.push_str(&text[last..start]);
        let value = if token == "DRUG" { drug } else { effect };
        if escape {
            out.push_str(&regex::escape(value));
        } else {
            out.push_str(value);
        }
        last = end;
    }
    out.push_str(&text[last..]);
    out
}

fn bind_pattern(pattern: &Pattern, drug: &str, effect: &str) -> Pattern {
    Pattern::new(substitute(pattern.source(), drug, effect, true))
        .expect("escaped substitution keeps a valid pattern valid")
}

/// Substitutes the instance's drug and effect into every placeholder.
pub fn bind_instance(
    doc: &SketchDocument,
    instance: &TaskInstance,
) -> Result<SketchDocument, EvalError> {
    if doc.task == TaskKind::Sentence || doc.bound {
        return Ok(doc.clone());
    }
    let drug = instance
        .drug
        .as_deref()
        .ok_or_else(|| EvalError::UnboundPlaceholder("DRUG".into()))?;
    let effect = instance
        .effect
        .as_deref()
        .ok_or_else(|| EvalError::UnboundPlaceholder("EFFECT".into()))?;

    let mut bound = doc.clone();
    for cond in &mut bound.conditions {
        cond.family = match &cond.family {
            ConditionFamily::Regex { pattern } => ConditionFamily::Regex {
                pattern: bind_pattern(pattern, drug, effect),
            },
            ConditionFamily::Keywords { phrases } => ConditionFamily::Keywords {
                phrases: phrases
                    .iter()
                    .map(|k| Keyword::new(substitute(&k.phrase, drug, effect, false)))
                    .collect(),
            },
            ConditionFamily::NumericCompare {
                op,
                threshold,
                scope,
            } => ConditionFamily::NumericCompare {
                op: *op,
                threshold: *threshold,
                scope: scope.as_ref().map(|p| bind_pattern(p, drug, effect)),
            },
            ConditionFamily::SemanticSim { query, threshold } => ConditionFamily::SemanticSim {
                query: substitute(query, drug, effect, false),
                threshold: *threshold,
            },
        };
    }
    bound.bound = true;
    Ok(bound)
}

/// Runs every condition in declaration order, then the validator.
pub fn run_sketch(
    doc: &SketchDocument,
    input: &InputText,
    scorer: &dyn SemanticScorer,
) -> Result<SketchRunResult, EvalError> {
    if !doc.bound {
        return Err(EvalError::UnboundPlaceholder(doc.placeholders.join(", ")));
    }
    let mut store = VariableStore::init(&doc.variables)?;
    let mut trace = ExecutionTrace::new();
    for cond in &doc.conditions {
        let outcome = evaluate(cond, input, scorer)?;
        store.apply_update(&mut trace, &cond.id, &outcome, &cond.target, cond.update)?;
    }
    let final_state = store.snapshot();
    let label = doc.validator.decide(&final_state)?;
    let evidence = trace
        .triggered()
        .map(|e| {
            let captures: Vec<String> = e.captures.iter().map(ToString::to_string).collect();
            format!("{}: {}", e.condition, captures.join(", "))
        })
        .collect();
    Ok(SketchRunResult {
        label,
        final_state,
        trace,
        evidence,
    })
}

/// Binds and runs one dataset item.
pub fn run_item(
    doc: &SketchDocument,
    item: &DatasetItem,
    scorer: &dyn SemanticScorer,
) -> Result<SketchRunResult, EvalError> {
    let bound = bind_instance(doc, &TaskInstance::from(item))?;
    run_sketch(&bound, &InputText::new(item.text.as_str()), scorer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusOptions {
    /// Worker threads; 0 uses the global rayon pool.
    pub jobs: usize,
    pub keep_trace: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            jobs: 0,
            keep_trace: true,
        }
    }
}

fn record_for(
    doc: &SketchDocument,
    item: &DatasetItem,
    scorer: &dyn SemanticScorer,
    keep_trace: bool,
) -> PredictionRecord {
    let result = run_item(doc, item, scorer).and_then(|r| match r.label.as_binary() {
        Some(b) => Ok((b, r)),
        None => Err(EvalError::Validator(format!(
            "label {} is not binary",
            r.label
        ))),
    });
    match result {
        Ok((label, r)) => PredictionRecord {
            id: item.id.clone(),
            label,
            evidence: r.evidence,
            invalid: false,
            trace: keep_trace.then_some(r.trace),
            raw: None,
            error: None,
        },
        Err(e) => PredictionRecord::failed(item.id.clone(), e.to_string()),
    }
}

/// Runs a sketch over a dataset. Items that fail become error records; the
/// output order is the input order for any worker count.
pub fn run_corpus(
    doc: &SketchDocument,
    items: &[DatasetItem],
    scorer: &dyn SemanticScorer,
    options: CorpusOptions,
) -> PredictionSet {
    let run = || -> Vec<PredictionRecord> {
        items
            .par_iter()
            .map(|item| record_for(doc, item, scorer, options.keep_trace))
            .collect()
    };
    let records = if options.jobs == 0 {
        run()
    } else {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
        {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!(
                    "could not build a {}-thread pool ({e}); running serially",
                    options.jobs
                );
                items
                    .iter()
                    .map(|item| record_for(doc, item, scorer, options.keep_trace))
                    .collect()
            }
        }
    };
    PredictionSet {
        method: "sketch".into(),
        model: doc.name.clone(),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::JaccardScorer;
    use crate::error::ScorerError;
    use crate::store::Value;

    fn relation() -> SketchDocument {
        parse_sketch(include_str!("../../fixtures/ade_relation.sketch")).unwrap()
    }

    fn sentence() -> SketchDocument {
        parse_sketch(include_str!("../../fixtures/ade_sentence.sketch")).unwrap()
    }

    fn item(id: &str, text: &str, drug: &str, effect: &str) -> DatasetItem {
        DatasetItem {
            id: id.into(),
            text: text.into(),
            drug: Some(drug.into()),
            effect: Some(effect.into()),
            label: 0,
        }
    }

    #[test]
    fn relation_fixture_shape() {
        let doc = relation();
        assert_eq!(doc.task, TaskKind::Relation);
        assert_eq!(doc.variables.len(), 6);
        assert_eq!(doc.placeholders, ["DRUG", "EFFECT"]);
        assert!(!doc.is_bound());
        let (expr, label) = doc.validator.clauses()[0];
        assert_eq!(label.as_str(), "1");
        assert_eq!(
            expr.to_string(),
            "drug && effect && scope && (explicit || temporal) && !negated"
        );
    }

    #[test]
    fn keywords_placeholder_binding() {
        let doc = relation();
        let inst = TaskInstance::relation("x", "amoxicillin", "rash");
        let bound = bind_instance(&doc, &inst).unwrap();
        match &bound.conditions[0].family {
            ConditionFamily::Keywords { phrases } => assert_eq!(phrases[0].phrase, "amoxicillin"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn regex_placeholders_are_escaped() {
        assert_eq!(
            substitute(r"\bDRUG\b", "a+b (x)", "", true),
            r"\ba\+b \(x\)\b"
        );
        assert_eq!(substitute("DRUG/EFFECT", "EFFECT", "e", false), "EFFECT/e");
        assert_eq!(substitute("DRUGS", "x", "y", false), "DRUGS");
        assert_eq!(substitute("aDRUG", "x", "y", false), "aDRUG");
        assert_eq!(placeholders_in(r"\bEFFECT\b|aDRUG"), ["EFFECT"]);
    }

    #[test]
    fn binding_requires_spans() {
        let doc = relation();
        let mut inst = TaskInstance::relation("x", "amoxicillin", "rash");
        inst.drug = None;
        assert_eq!(
            bind_instance(&doc, &inst).unwrap_err(),
            EvalError::UnboundPlaceholder("DRUG".into())
        );
        let r = run_sketch(&doc, &InputText::new("x"), &JaccardScorer);
        assert!(matches!(r, Err(EvalError::UnboundPlaceholder(_))));
    }

    #[test]
    fn sentence_sketch_binds_to_itself() {
        let doc = sentence();
        let bound = bind_instance(&doc, &TaskInstance::sentence("x")).unwrap();
        assert_eq!(bound.conditions, doc.conditions);
    }

    #[test]
    fn worked_examples() {
        let doc = relation();
        let pos = item(
            "p",
            "The patient developed rash after starting amoxicillin.",
            "amoxicillin",
            "rash",
        );
        let r = run_item(&doc, &pos, &JaccardScorer).unwrap();
        let flags: Vec<bool> = ["drug", "effect", "scope", "explicit", "temporal", "negated"]
            .iter()
            .map(|v| r.final_state.get(v) == Some(&Value::Bool(true)))
            .collect();
        assert_eq!(flags, [true, true, true, false, true, false]);
        assert_eq!(r.label.as_str(), "1");
        assert_eq!(r.evidence.len(), r.trace.triggered().count());
        assert!(r.evidence.contains(&"scope: patient".to_string()));
        assert_eq!(r.trace.len(), doc.conditions.len());

        let neg = item(
            "n",
            "Amoxicillin did not cause any rash in the patient.",
            "amoxicillin",
            "rash",
        );
        let r = run_item(&doc, &neg, &JaccardScorer).unwrap();
        assert_eq!(r.final_state.get("negated"), Some(&Value::Bool(true)));
        assert_eq!(r.label.as_str(), "0");

        let empty = item("e", "", "amoxicillin", "rash");
        let r = run_item(&doc, &empty, &JaccardScorer).unwrap();
        assert!(r.final_state.iter().all(|(_, v)| *v == Value::Bool(false)));
        assert_eq!(r.label.as_str(), "0");
        assert!(r.evidence.is_empty());
    }

    #[test]
    fn sentence_fixture_examples() {
        let doc = sentence();
        let run = |t: &str| {
            run_sketch(&doc, &InputText::new(t), &JaccardScorer)
                .unwrap()
                .label
        };
        assert_eq!(
            run("The patient developed rash after starting amoxicillin.").as_str(),
            "1"
        );
        assert_eq!(
            run("Amoxicillin did not cause any rash in the patient.").as_str(),
            "0"
        );
        assert_eq!(run("").as_str(), "0");
    }

    struct FailsOn(&'static str);

    impl SemanticScorer for FailsOn {
        fn score(&self, _query: &str, text: &str) -> Result<f64, ScorerError> {
            if text.contains(self.0) {
                Err(ScorerError("service unavailable".into()))
            } else {
                Ok(0.0)
            }
        }
    }

    #[test]
    fn corpus_records_errors_in_order() {
        let src = "sketch s\nlabels 0 1\nvariables:\n  close: bool\nconditions:\n  close <- semantic(\"rash\", 0.5)\nvalidator:\n  label 1 if close\n  default 0\n";
        let doc = parse_sketch(src).unwrap();
        let items = vec![
            DatasetItem::sentence("a", "fine", 0),
            DatasetItem::sentence("b", "boom", 1),
        ];
        let set = run_corpus(&doc, &items, &FailsOn("boom"), CorpusOptions::default());
        assert_eq!(set.records.len(), 2);
        assert_eq!(set.records[0].id, "a");
        assert!(set.records[0].error.is_none());
        assert!(set.records[1].error.as_deref().unwrap().contains("close"));
    }

    #[test]
    fn corpus_is_independent_of_jobs() {
        let doc = relation();
        let items: Vec<_> = (0..50)
            .map(|i| {
                item(
                    &format!("i{i}"),
                    if i % 2 == 0 {
                        "The patient developed rash after starting amoxicillin."
                    } else {
                        "Amoxicillin did not cause any rash in the patient."
                    },
                    "amoxicillin",
                    "rash",
                )
            })
            .collect();
        let serial = run_corpus(
            &doc,
            &items,
            &JaccardScorer,
            CorpusOptions {
                jobs: 1,
                keep_trace: true,
            },
        );
        let parallel = run_corpus(
            &doc,
            &items,
            &JaccardScorer,
            CorpusOptions {
                jobs: 8,
                keep_trace: true,
            },
        );
        assert_eq!(serial.to_jsonl(), parallel.to_jsonl());
    }
}
