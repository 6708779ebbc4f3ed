//! Prompt text for the four prompting strategies plus the compiler meta-prompt.
//!
//! Every instance prompt ends with the target block: optional `Drug:` and
//! `Effect:` lines followed by a final `Sentence:` line. Slot values are
//! written as JSON string literals, which leaves ordinary sentences untouched
//! and keeps the block parseable by [`parse_instance_marker`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::PromptError;
use crate::eval::DatasetItem;
use crate::sketch::{SketchDocument, TaskKind};
use crate::store::Datatype;
use crate::validator::BoolExpr;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub text: String,
    pub drug: Option<String>,
    pub effect: Option<String>,
    pub label: Option<u8>,
}

impl TaskInstance {
    pub fn sentence(text: impl Into<String>) -> Self {
        TaskInstance {
            text: text.into(),
            ..Default::default()
        }
    }

    pub fn relation(
        text: impl Into<String>,
        drug: impl Into<String>,
        effect: impl Into<String>,
    ) -> Self {
        TaskInstance {
            text: text.into(),
            drug: Some(drug.into()),
            effect: Some(effect.into()),
            ..Default::default()
        }
    }

    pub fn with_label(mut self, label: u8) -> Self {
        self.label = Some(label);
        self
    }

    fn spans(&self) -> Result<Option<(&str, &str)>, PromptError> {
        match (&self.drug, &self.effect) {
            (Some(d), Some(e)) => Ok(Some((d, e))),
            (None, None) => Ok(None),
            _ => Err(PromptError::MissingSpans),
        }
    }
}

impl From<&DatasetItem> for TaskInstance {
    fn from(item: &DatasetItem) -> Self {
        TaskInstance {
            id: item.id.clone(),
            text: item.text.clone(),
            drug: item.drug.clone(),
            effect: item.effect.clone(),
            label: Some(item.label),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Lsp,
    ZeroShot,
    Brief,
    Cot,
    MetaCompiler,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Lsp,
        Strategy::ZeroShot,
        Strategy::Brief,
        Strategy::Cot,
        Strategy::MetaCompiler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Lsp => "lsp",
            Strategy::ZeroShot => "zero-shot",
            Strategy::Brief => "brief",
            Strategy::Cot => "cot",
            Strategy::MetaCompiler => "meta",
        }
    }

    pub fn schema(self) -> OutputSchema {
        match self {
            Strategy::ZeroShot => OutputSchema::BareBinary,
            _ => OutputSchema::LabelJson,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lsp" => Ok(Strategy::Lsp),
            "zero-shot" | "zero_shot" => Ok(Strategy::ZeroShot),
            "brief" => Ok(Strategy::Brief),
            "cot" => Ok(Strategy::Cot),
            "meta" | "meta_compiler" => Ok(Strategy::MetaCompiler),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// What a reply to the prompt should look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSchema {
    /// `{"label": 0|1, "evidence": ...}`; evidence optional.
    LabelJson,
    /// A lone `1` or `0`.
    BareBinary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub strategy: Strategy,
    pub text: String,
    pub schema: OutputSchema,
}

impl RenderedPrompt {
    fn new(strategy: Strategy, text: String) -> Self {
        RenderedPrompt {
            strategy,
            text,
            schema: strategy.schema(),
        }
    }
}

const JSON_INSTRUCTION: &str = r#"Return JSON: {"label": ..., "evidence": ...}."#;

const ZERO_SHOT_HEAD: &str = "Classify whether the sentence reports that the drug caused the effect.\n\
Treat only an explicit trigger (\"caused by\", \"due to\", \"secondary to\", \"induced by\") as evidence of causation. \
When no such trigger is present, answer 0.\n\
Output 1 or 0.";

const BRIEF_HEAD: &str = r#"Label 1 if the drug is present, the effect is present, the effect is due to the drug, and the statement is not negated. Output JSON: {"label": ...}."#;

const COT_HEAD: &str =
    "Think step by step. Does the sentence mention the drug? Does it describe the effect? \
Does it link them? Finally output JSON with a label based only on the final reasoning.";

const LSP_HEAD: &str = "Answer the following binary questions silently.";

const META_TEMPLATE: &str = r#"You are an LSP-compiler. Given any prompt that requires classification or decision-making, convert it into an LSP-style prompt as follows:
1. Extract all binary conditions required for the decision.
2. Rewrite each condition as a silent yes/no question.
3. Assign each condition to a variable name.
4. Construct a single decision rule that uses AND, OR, and NOT to combine these variables.
5. Require strict JSON output: {"label": ..., "evidence": ...}.
6. Include exactly one positive and one negative example if possible.
Return the final LSP-form prompt. Input prompt: <<<
!!!USER_PROMPT
>>>"#;

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn sentence_block(text: &str, spans: Option<(&str, &str)>) -> String {
    let mut out = String::new();
    if let Some((drug, effect)) = spans {
        out.push_str(&format!(
            "Drug: {}\nEffect: {}\n",
            quoted(drug),
            quoted(effect)
        ));
    }
    out.push_str(&format!("Sentence: {}", quoted(text)));
    out
}

fn target_block(instance: &TaskInstance) -> Result<String, PromptError> {
    if instance.text.trim().is_empty() {
        return Err(PromptError::EmptySentence);
    }
    Ok(sentence_block(&instance.text, instance.spans()?))
}

pub fn render_zero_shot(instance: &TaskInstance) -> Result<RenderedPrompt, PromptError> {
    let text = format!("{ZERO_SHOT_HEAD}\n{}", target_block(instance)?);
    Ok(RenderedPrompt::new(Strategy::ZeroShot, text))
}

pub fn render_brief(instance: &TaskInstance) -> Result<RenderedPrompt, PromptError> {
    let text = format!("{BRIEF_HEAD}\n{}", target_block(instance)?);
    Ok(RenderedPrompt::new(Strategy::Brief, text))
}

pub fn render_cot(instance: &TaskInstance) -> Result<RenderedPrompt, PromptError> {
    let text = format!(
        "{COT_HEAD}\n{JSON_INSTRUCTION}\n{}",
        target_block(instance)?
    );
    Ok(RenderedPrompt::new(Strategy::Cot, text))
}

pub fn render_compiler_metaprompt(user_prompt: &str) -> Result<RenderedPrompt, PromptError> {
    if user_prompt.trim().is_empty() {
        return Err(PromptError::EmptyPrompt);
    }
    let text = META_TEMPLATE.replace("!!!USER_PROMPT", user_prompt);
    Ok(RenderedPrompt::new(Strategy::MetaCompiler, text))
}

/// One checklist entry: the variable it asks about and the question text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChecklistItem {
    pub variable: String,
    pub question: String,
}

/// Checklist questions, one per variable targeted by at least one condition,
/// in order of first targeting condition. Variables annotated with a phrase
/// and no question are left to the rule.
pub fn checklist(doc: &SketchDocument) -> Vec<ChecklistItem> {
    let mut items: Vec<ChecklistItem> = Vec::new();
    for cond in &doc.conditions {
        if items.iter().any(|i| i.variable == cond.target) {
            continue;
        }
        let hint = doc.hints.get(&cond.target).cloned().unwrap_or_default();
        let question = match (hint.question, hint.phrase) {
            (Some(q), _) => q,
            (None, Some(_)) => continue,
            (None, None) => default_question(doc, &cond.target),
        };
        items.push(ChecklistItem {
            variable: cond.target.clone(),
            question,
        });
    }
    items
}

fn default_question(doc: &SketchDocument, var: &str) -> String {
    let spoken = var.replace('_', " ");
    let boolean = doc
        .variables
        .iter()
        .find(|v| v.name == var)
        .is_some_and(|v| v.datatype == Datatype::Boolean);
    if boolean {
        format!("Does the sentence indicate {spoken}?")
    } else {
        format!("What is the {spoken}?")
    }
}

struct RuleWriter<'a> {
    doc: &'a SketchDocument,
    numbers: Vec<&'a str>,
}

impl RuleWriter<'_> {
    fn atom(&self, var: &str) -> String {
        if let Some(i) = self.numbers.iter().position(|v| *v == var) {
            return format!("({})", i + 1);
        }
        match self.doc.hints.get(var).and_then(|h| h.phrase.as_ref()) {
            Some(phrase) => phrase.clone(),
            None => var.to_string(),
        }
    }

    fn write(&self, expr: &BoolExpr, nested: bool) -> String {
        match expr {
            BoolExpr::Const(b) => b.to_string(),
            BoolExpr::Var(v) => self.atom(v),
            BoolExpr::Cmp { var, op, literal } => format!("{} {op} {literal}", self.atom(var)),
            BoolExpr::Not(inner) => match inner.as_ref() {
                BoolExpr::Var(v)
                    if !self.numbers.contains(&v.as_str())
                        && self.doc.hints.get(v).is_some_and(|h| h.phrase.is_some()) =>
                {
                    format!("no {}", self.atom(v))
                }
                other => format!("NOT {}", self.write(other, true)),
            },
            BoolExpr::And(..) => {
                let parts: Vec<String> = expr
                    .conjuncts()
                    .iter()
                    .map(|e| self.write(e, true))
                    .collect();
                let s = parts.join(" & ");
                if nested {
                    format!("({s})")
                } else {
                    s
                }
            }
            BoolExpr::Or(..) => {
                let parts: Vec<String> = expr
                    .disjuncts()
                    .iter()
                    .map(|e| self.write(e, true))
                    .collect();
                let s = parts.join(" OR ");
                if nested {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
}

/// The decision rule in checklist terms, e.g.
/// `Set label 1 if and only if: (1) & (2) & no negation.`
pub fn render_rule(doc: &SketchDocument) -> String {
    let items = checklist(doc);
    let writer = RuleWriter {
        doc,
        numbers: items.iter().map(|i| i.variable.as_str()).collect(),
    };
    let clauses = doc.validator.clauses();
    let default = doc.validator.default_label();
    if let [(expr, label)] = clauses.as_slice() {
        if doc.labels.len() == 2 && *label != default {
            return format!(
                "Set label {label} if and only if: {}.",
                writer.write(expr, false)
            );
        }
    }
    let mut lines = Vec::new();
    for (i, (expr, label)) in clauses.iter().enumerate() {
        let lead = if i == 0 { "Set" } else { "Otherwise, set" };
        lines.push(format!(
            "{lead} label {label} if: {}.",
            writer.write(expr, false)
        ));
    }
    lines.push(if clauses.is_empty() {
        format!("Set label {default}.")
    } else {
        format!("Otherwise, set label {default}.")
    });
    lines.join("\n")
}

/// Checklist prompt compiled from a sketch, with one positive and one negative
/// example ahead of the target.
pub fn render_lsp_prompt(
    doc: &SketchDocument,
    instance: &TaskInstance,
    examples: (&TaskInstance, &TaskInstance),
) -> Result<RenderedPrompt, PromptError> {
    let (pos, neg) = examples;
    if pos.label != Some(1) || neg.label != Some(0) {
        return Err(PromptError::ExampleLabels);
    }
    let relation = doc.task == TaskKind::Relation;
    let block = |inst: &TaskInstance| -> Result<String, PromptError> {
        if inst.text.trim().is_empty() {
            return Err(PromptError::EmptySentence);
        }
        let spans = if relation {
            Some(inst.spans()?.ok_or(PromptError::MissingSpans)?)
        } else {
            None
        };
        Ok(sentence_block(&inst.text, spans))
    };

    let mut text = String::from(LSP_HEAD);
    text.push('\n');
    for (i, item) in checklist(doc).iter().enumerate() {
        text.push_str(&format!("{}. {}\n", i + 1, item.question));
    }
    text.push_str(&render_rule(doc));
    text.push('\n');
    text.push_str(JSON_INSTRUCTION);
    text.push('\n');
    for ex in [pos, neg] {
        text.push_str(&format!(
            "\nExample:\n{}\nLabel: {}\n",
            block(ex)?,
            ex.label.expect("checked above")
        ));
    }
    text.push('\n');
    text.push_str(&block(instance)?);
    Ok(RenderedPrompt::new(Strategy::Lsp, text))
}

/// The fixed positive/negative example pair used in checklist prompts.
pub fn exemplar_pair() -> (TaskInstance, TaskInstance) {
    let mut pos = TaskInstance::relation(
        "The patient developed rash after starting amoxicillin.",
        "amoxicillin",
        "rash",
    )
    .with_label(1);
    pos.id = "example-positive".into();
    let mut neg = TaskInstance::relation(
        "Amoxicillin did not cause any rash in the patient.",
        "amoxicillin",
        "rash",
    )
    .with_label(0);
    neg.id = "example-negative".into();
    (pos, neg)
}

/// Renders any strategy for one instance. Only [`Strategy::Lsp`] needs a
/// sketch; [`Strategy::MetaCompiler`] wraps the zero-shot prompt.
pub fn render(
    strategy: Strategy,
    doc: Option<&SketchDocument>,
    instance: &TaskInstance,
) -> Result<RenderedPrompt, PromptError> {
    let (pos, neg) = exemplar_pair();
    match strategy {
        Strategy::Lsp => render_lsp_prompt(
            doc.ok_or(PromptError::MissingSketch)?,
            instance,
            (&pos, &neg),
        ),
        Strategy::ZeroShot => render_zero_shot(instance),
        Strategy::Brief => render_brief(instance),
        Strategy::Cot => render_cot(instance),
        Strategy::MetaCompiler => render_compiler_metaprompt(&render_zero_shot(instance)?.text),
    }
}

/// Target instance recovered from the final block of a rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMarker {
    pub text: String,
    pub drug: Option<String>,
    pub effect: Option<String>,
}

/// Reads the target block back out of a prompt produced by this module.
pub fn parse_instance_marker(prompt: &str) -> Option<InstanceMarker> {
    let mut lines = prompt.trim_end_matches('\n').rsplit('\n');
    let slot = |line: &str, key: &str| -> Option<String> {
        serde_json::from_str::<String>(line.strip_prefix(key)?).ok()
    };
    let text = slot(lines.next()?, "Sentence: ")?;
    let effect_line = lines.next();
    let drug_line = lines.next();
    let (drug, effect) = match (
        drug_line.and_then(|l| slot(l, "Drug: ")),
        effect_line.and_then(|l| slot(l, "Effect: ")),
    ) {
        (Some(d), Some(e)) => (Some(d), Some(e)),
        _ => (None, None),
    };
    Some(InstanceMarker { text, drug, effect })
}
