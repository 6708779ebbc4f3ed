//! Deterministic condition evaluators.
//!
//! Each condition maps an [`InputText`] to a [`ConditionOutcome`]: a trigger
//! flag plus the values it captured. Four families exist: regular expressions,
//! keyword phrases, numeric comparisons and semantic similarity. Regex and
//! keyword matching is case-insensitive.

use std::fmt;
use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, ScorerError};
use crate::store::UpdateKind;

/// Tolerance used for `=` between floats, both in numeric conditions and in
/// validator comparisons.
pub const FLOAT_EQ_TOLERANCE: f64 = 1e-9;

/// Lowercase tokens split on maximal runs of non-alphanumeric characters.
pub fn tokenize(raw: &str) -> Vec<String> {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputText {
    raw: String,
    tokens: Vec<String>,
}

impl InputText {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw);
        InputText { raw, tokens }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl From<&str> for InputText {
    fn from(raw: &str) -> Self {
        InputText::new(raw)
    }
}

/// A value captured by a triggered condition. Span offsets count characters,
/// not bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Capture {
    Span {
        start: usize,
        end: usize,
        text: String,
    },
    Number {
        value: f64,
    },
    Keyword {
        text: String,
    },
    Similarity {
        score: f64,
    },
}

impl fmt::Display for Capture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capture::Span { text, .. } | Capture::Keyword { text } => f.write_str(text),
            Capture::Number { value } => write!(f, "{value}"),
            Capture::Similarity { score } => write!(f, "similarity {score:.4}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub triggered: bool,
    pub captures: Vec<Capture>,
}

impl ConditionOutcome {
    pub fn not_triggered() -> Self {
        ConditionOutcome {
            triggered: false,
            captures: Vec::new(),
        }
    }

    pub fn triggered(captures: Vec<Capture>) -> Self {
        ConditionOutcome {
            triggered: true,
            captures,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CompareOp {
    pub fn parse(symbol: &str) -> Option<Self> {
        Some(match symbol {
            "<" => CompareOp::Lt,
            "<=" | "≤" => CompareOp::Le,
            "=" | "==" => CompareOp::Eq,
            "!=" | "≠" => CompareOp::Ne,
            ">=" | "≥" => CompareOp::Ge,
            ">" => CompareOp::Gt,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
        }
    }

    pub fn compare(self, x: f64, threshold: f64) -> bool {
        let equal = (x - threshold).abs() <= FLOAT_EQ_TOLERANCE;
        match self {
            CompareOp::Lt => x < threshold,
            CompareOp::Le => x <= threshold,
            CompareOp::Eq => equal,
            CompareOp::Ne => !equal,
            CompareOp::Ge => x >= threshold,
            CompareOp::Gt => x > threshold,
        }
    }

    /// Equality operators are the only ones meaningful for enum symbols.
    pub fn is_equality(self) -> bool {
        matches!(self, CompareOp::Eq | CompareOp::Ne)
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A case-insensitive compiled regular expression that remembers its source.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    regex: Regex,
}

impl Pattern {
    pub fn new(source: impl Into<String>) -> Result<Self, regex::Error> {
        let source = source.into();
        let regex = RegexBuilder::new(&source).case_insensitive(true).build()?;
        Ok(Pattern { source, regex })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    /// First non-empty match.
    fn first_match<'t>(&self, text: &'t str) -> Option<regex::Match<'t>> {
        self.regex.find_iter(text).find(|m| !m.is_empty())
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Keyword {
    pub phrase: String,
    #[serde(skip)]
    tokens: Vec<String>,
}

impl Keyword {
    pub fn new(phrase: impl Into<String>) -> Self {
        let phrase = phrase.into();
        let tokens = tokenize(&phrase);
        Keyword { phrase, tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConditionFamily {
    Regex {
        pattern: Pattern,
    },
    Keywords {
        phrases: Vec<Keyword>,
    },
    NumericCompare {
        op: CompareOp,
        threshold: f64,
        scope: Option<Pattern>,
    },
    SemanticSim {
        query: String,
        threshold: f64,
    },
}

impl ConditionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ConditionFamily::Regex { .. } => "regex",
            ConditionFamily::Keywords { .. } => "keywords",
            ConditionFamily::NumericCompare { .. } => "numeric",
            ConditionFamily::SemanticSim { .. } => "semantic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSpec {
    pub id: String,
    pub target: String,
    pub update: UpdateKind,
    #[serde(flatten)]
    pub family: ConditionFamily,
}

/// Scores how well `text` matches `query`, in `[0, 1]`. Equal inputs must give
/// equal scores.
pub trait SemanticScorer: Send + Sync {
    fn score(&self, query: &str, text: &str) -> Result<f64, ScorerError>;
}

impl<S: SemanticScorer + ?Sized> SemanticScorer for &S {
    fn score(&self, query: &str, text: &str) -> Result<f64, ScorerError> {
        (**self).score(query, text)
    }
}

impl<S: SemanticScorer + ?Sized> SemanticScorer for Box<S> {
    fn score(&self, query: &str, text: &str) -> Result<f64, ScorerError> {
        (**self).score(query, text)
    }
}

/// Offline scorer: Jaccard similarity of the two token sets. Two empty token
/// sets score 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardScorer;

impl SemanticScorer for JaccardScorer {
    fn score(&self, query: &str, text: &str) -> Result<f64, ScorerError> {
        use std::collections::BTreeSet;
        let q: BTreeSet<String> = tokenize(query).into_iter().collect();
        let t: BTreeSet<String> = tokenize(text).into_iter().collect();
        let union = q.union(&t).count();
        if union == 0 {
            return Ok(1.0);
        }
        Ok(q.intersection(&t).count() as f64 / union as f64)
    }
}

fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Triggered iff the pattern has a non-empty match; the first one is captured.
pub fn eval_regex(pattern: &Pattern, input: &InputText) -> ConditionOutcome {
    match pattern.first_match(input.raw()) {
        Some(m) => ConditionOutcome::triggered(vec![Capture::Span {
            start: char_offset(input.raw(), m.start()),
            end: char_offset(input.raw(), m.end()),
            text: m.as_str().to_string(),
        }]),
        None => ConditionOutcome::not_triggered(),
    }
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty()
        && needle.len() <= haystack.len()
        && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Triggered iff some phrase occurs as a contiguous run of whole tokens.
pub fn eval_keywords(phrases: &[Keyword], input: &InputText) -> ConditionOutcome {
    let mut captures: Vec<Capture> = Vec::new();
    for kw in phrases {
        if !contains_run(input.tokens(), kw.tokens()) {
            continue;
        }
        let capture = Capture::Keyword {
            text: kw.phrase.clone(),
        };
        if !captures.contains(&capture) {
            captures.push(capture);
        }
    }
    if captures.is_empty() {
        ConditionOutcome::not_triggered()
    } else {
        ConditionOutcome::triggered(captures)
    }
}

fn number_regex() -> &'static Regex {
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    NUMBER.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("number pattern"))
}

/// Unsigned decimal literals in textual order, restricted to the first match
/// of `scope` when given.
pub fn extract_numbers(input: &InputText, scope: Option<&Pattern>) -> Vec<f64> {
    let region = match scope {
        Some(p) => match p.first_match(input.raw()) {
            Some(m) => m.as_str(),
            None => return Vec::new(),
        },
        None => input.raw(),
    };
    number_regex()
        .find_iter(region)
        .filter_map(|m| m.as_str().parse::<f64>().ok())
        .filter(|x| x.is_finite())
        .collect()
}

/// Compares the first extracted number against `threshold`. No number means
/// not triggered.
pub fn eval_numeric_compare(
    op: CompareOp,
    threshold: f64,
    scope: Option<&Pattern>,
    input: &InputText,
) -> ConditionOutcome {
    match extract_numbers(input, scope).first() {
        Some(&x) if op.compare(x, threshold) => {
            ConditionOutcome::triggered(vec![Capture::Number { value: x }])
        }
        _ => ConditionOutcome::not_triggered(),
    }
}

pub fn eval_semantic_sim(
    query: &str,
    threshold: f64,
    input: &InputText,
    scorer: &dyn SemanticScorer,
) -> Result<ConditionOutcome, ScorerError> {
    let score = scorer.score(query, input.raw())?;
    if !score.is_finite() || !(0.0..=1.0).contains(&score) {
        return Err(ScorerError(format!("score {score} outside [0, 1]")));
    }
    Ok(if score >= threshold {
        ConditionOutcome::triggered(vec![Capture::Similarity { score }])
    } else {
        ConditionOutcome::not_triggered()
    })
}

/// Evaluates any condition family. Only semantic conditions can fail.
pub fn evaluate(
    spec: &ConditionSpec,
    input: &InputText,
    scorer: &dyn SemanticScorer,
) -> Result<ConditionOutcome, EvalError> {
    Ok(match &spec.family {
        ConditionFamily::Regex { pattern } => eval_regex(pattern, input),
        ConditionFamily::Keywords { phrases } => eval_keywords(phrases, input),
        ConditionFamily::NumericCompare {
            op,
            threshold,
            scope,
        } => eval_numeric_compare(*op, *threshold, scope.as_ref(), input),
        ConditionFamily::SemanticSim { query, threshold } => {
            eval_semantic_sim(query, *threshold, input, scorer).map_err(|source| {
                EvalError::Scorer {
                    condition: spec.id.clone(),
                    source,
                }
            })?
        }
    })
}
