//! Sending prompts to text-generation backends and reading strict-JSON replies.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::condition::{InputText, SemanticScorer};
use crate::error::{InferenceError, ScorerError};
use crate::eval::{DatasetItem, PredictionRecord, PredictionSet};
use crate::prompt::{
    parse_instance_marker, render, OutputSchema, RenderedPrompt, Strategy, TaskInstance,
};
use crate::sketch::{bind_instance, run_sketch, SketchDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub temperature: f64,
    pub top_p_disabled: bool,
    pub top_k_disabled: bool,
    pub max_output_tokens: u32,
    pub seed: Option<u64>,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            temperature: 0.0,
            top_p_disabled: true,
            top_k_disabled: true,
            max_output_tokens: 256,
            seed: None,
        }
    }
}

impl DecodingConfig {
    pub fn is_deterministic(&self) -> bool {
        self.temperature == 0.0 && self.top_p_disabled && self.top_k_disabled
    }

    pub fn check(&self, strict: bool) -> Result<(), InferenceError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(InferenceError::Config(format!(
                "temperature {} must be a non-negative number",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(InferenceError::Config(
                "max_output_tokens must be positive".into(),
            ));
        }
        if strict && !self.is_deterministic() {
            return Err(InferenceError::Config(format!(
                "strict determinism requires temperature 0 with top-p and top-k disabled (temperature is {})",
                self.temperature
            )));
        }
        Ok(())
    }
}

pub trait Backend: Send + Sync {
    fn generate(&self, prompt: &str, config: &DecodingConfig) -> Result<String, InferenceError>;

    /// Model name used in reports.
    fn identity(&self) -> &str;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn generate(&self, prompt: &str, config: &DecodingConfig) -> Result<String, InferenceError> {
        (**self).generate(prompt, config)
    }

    fn identity(&self) -> &str {
        (**self).identity()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedPrediction {
    /// `None` marks an invalid reply.
    pub label: Option<u8>,
    pub evidence: Option<String>,
    pub raw: String,
}

impl ParsedPrediction {
    pub fn is_invalid(&self) -> bool {
        self.label.is_none()
    }

    /// Label used for scoring: invalid replies count as 0.
    pub fn scored_label(&self) -> u8 {
        self.label.unwrap_or(0)
    }
}

const MAX_OBJECT_STARTS: usize = 64;

fn fenced_body(raw: &str) -> Option<&str> {
    let start = raw.find("```")?;
    let after = &raw[start + 3..];
    let body_start = after.find('\n').map_or(0, |i| i + 1);
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    Some(&body[..end])
}

fn first_object(text: &str) -> Option<serde_json::Map<String, Json>> {
    for (i, _) in text.match_indices('{').take(MAX_OBJECT_STARTS) {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Json>();
        if let Some(Ok(Json::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

fn label_of(value: &Json) -> Option<u8> {
    match value {
        Json::Bool(b) => Some(u8::from(*b)),
        Json::Number(n) => match n.as_u64() {
            Some(v @ (0 | 1)) => Some(v as u8),
            _ => None,
        },
        _ => None,
    }
}

/// Reads a reply. JSON objects are found inside code fences or surrounding
/// prose; with `expects_bare`, a reply that is just `1` or `0` also counts.
/// Never fails: unusable replies come back with `label: None`.
pub fn parse_strict_json(raw: &str, expects_bare: bool) -> ParsedPrediction {
    let mut parsed = ParsedPrediction {
        label: None,
        evidence: None,
        raw: raw.to_string(),
    };
    if expects_bare {
        let token = raw.trim().trim_matches('`').trim();
        if token == "0" || token == "1" {
            parsed.label = Some(u8::from(token == "1"));
            return parsed;
        }
    }
    let object = fenced_body(raw)
        .and_then(first_object)
        .or_else(|| first_object(raw));
    if let Some(map) = object {
        parsed.label = map.get("label").and_then(label_of);
        if parsed.label.is_some() {
            parsed.evidence = match map.get("evidence") {
                None | Some(Json::Null) => None,
                Some(Json::String(s)) => Some(s.clone()),
                Some(other) => Some(other.to_string()),
            };
        }
    }
    parsed
}

/// Retry policy for transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

fn digest(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

/// Sends prompts through a backend, retrying transport errors and logging
/// non-deterministic completions.
pub struct Classifier<'a> {
    backend: &'a dyn Backend,
    config: DecodingConfig,
    retry: RetryPolicy,
    seen: Mutex<HashMap<u64, u64>>,
}

impl<'a> Classifier<'a> {
    pub fn new(
        backend: &'a dyn Backend,
        config: DecodingConfig,
        strict: bool,
    ) -> Result<Self, InferenceError> {
        config.check(strict)?;
        Ok(Classifier {
            backend,
            config,
            retry: RetryPolicy::default(),
            seen: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend
    }

    fn generate(&self, prompt: &str) -> Result<String, InferenceError> {
        let attempts = self.retry.attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.backend.generate(prompt, &self.config) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_transport() && attempt < attempts => {
                    let delay = self.retry.base_delay * 2u32.pow(attempt - 1);
                    log::warn!("transport error (attempt {attempt}/{attempts}): {e}; retrying in {delay:?}");
                    thread::sleep(delay);
                }
                Err(InferenceError::Transport { message, .. }) => {
                    return Err(InferenceError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub fn classify(&self, prompt: &RenderedPrompt) -> Result<ParsedPrediction, InferenceError> {
        if prompt.strategy == Strategy::MetaCompiler {
            return Err(InferenceError::Config(
                "the compiler meta-prompt produces a prompt, not a label".into(),
            ));
        }
        let raw = self.generate(&prompt.text)?;
        if self.config.is_deterministic() {
            let (p, r) = (digest(&prompt.text), digest(&raw));
            let mut seen = self.seen.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(prev) = seen.insert(p, r) {
                if prev != r {
                    log::warn!(
                        "backend {} returned different completions for an identical prompt",
                        self.backend.identity()
                    );
                }
            }
        }
        Ok(parse_strict_json(
            &raw,
            prompt.schema == OutputSchema::BareBinary,
        ))
    }
}

pub fn classify(
    backend: &dyn Backend,
    prompt: &RenderedPrompt,
    config: &DecodingConfig,
) -> Result<ParsedPrediction, InferenceError> {
    Classifier::new(backend, config.clone(), false)?.classify(prompt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub strategy: Strategy,
    /// Requests in flight at once.
    pub jobs: usize,
    pub keep_raw: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            strategy: Strategy::Lsp,
            jobs: 4,
            keep_raw: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutcome {
    pub predictions: PredictionSet,
    /// Items whose request failed after all retries.
    pub transport_failures: usize,
}

fn classify_item(
    classifier: &Classifier<'_>,
    doc: Option<&SketchDocument>,
    item: &DatasetItem,
    options: ClassifyOptions,
) -> (PredictionRecord, bool) {
    let prompt = match render(options.strategy, doc, &TaskInstance::from(item)) {
        Ok(p) => p,
        Err(e) => {
            return (
                PredictionRecord::failed(item.id.clone(), e.to_string()),
                false,
            )
        }
    };
    match classifier.classify(&prompt) {
        Ok(p) => (
            PredictionRecord {
                id: item.id.clone(),
                label: p.scored_label(),
                evidence: p.evidence.clone().into_iter().collect(),
                invalid: p.is_invalid(),
                trace: None,
                raw: options.keep_raw.then(|| p.raw.clone()),
                error: None,
            },
            false,
        ),
        Err(e) => {
            let transport = e.is_transport();
            (
                PredictionRecord::failed(item.id.clone(), e.to_string()),
                transport,
            )
        }
    }
}

/// Classifies every item with the rendered prompt for `options.strategy`.
/// Failures become error records; output follows input order.
pub fn classify_corpus(
    classifier: &Classifier<'_>,
    doc: Option<&SketchDocument>,
    items: &[DatasetItem],
    options: ClassifyOptions,
) -> Result<ClassifyOutcome, InferenceError> {
    let run = || -> Vec<(PredictionRecord, bool)> {
        items
            .par_iter()
            .map(|item| classify_item(classifier, doc, item, options))
            .collect()
    };
    let results = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| InferenceError::Config(format!("thread pool: {e}")))?
        .install(run);
    let transport_failures = results.iter().filter(|(_, t)| *t).count();
    Ok(ClassifyOutcome {
        predictions: PredictionSet {
            method: options.strategy.name().to_string(),
            model: classifier.backend.identity().to_string(),
            records: results.into_iter().map(|(r, _)| r).collect(),
        },
        transport_failures,
    })
}

/// Replies with the same text to every prompt.
#[derive(Debug, Clone)]
pub struct StubBackend {
    pub reply: String,
    pub name: String,
}

impl StubBackend {
    pub fn new(reply: impl Into<String>) -> Self {
        StubBackend {
            reply: reply.into(),
            name: "stub".into(),
        }
    }
}

impl Backend for StubBackend {
    fn generate(&self, _prompt: &str, _config: &DecodingConfig) -> Result<String, InferenceError> {
        Ok(self.reply.clone())
    }

    fn identity(&self) -> &str {
        &self.name
    }
}

/// Answers rendered prompts by running the sketch on the instance embedded in
/// the prompt's target block.
pub struct OracleBackend<S> {
    doc: SketchDocument,
    scorer: S,
    name: String,
}

pub fn sketch_oracle_backend<S: SemanticScorer>(
    doc: SketchDocument,
    scorer: S,
) -> OracleBackend<S> {
    let name = format!("oracle:{}", doc.name);
    OracleBackend { doc, scorer, name }
}

impl<S: SemanticScorer> Backend for OracleBackend<S> {
    fn generate(&self, prompt: &str, _config: &DecodingConfig) -> Result<String, InferenceError> {
        let marker = parse_instance_marker(prompt).ok_or(InferenceError::MissingMarker)?;
        let instance = TaskInstance {
            text: marker.text,
            drug: marker.drug,
            effect: marker.effect,
            ..Default::default()
        };
        let bound = bind_instance(&self.doc, &instance)
            .map_err(|e| InferenceError::Backend(e.to_string()))?;
        let result = run_sketch(
            &bound,
            &InputText::new(instance.text.as_str()),
            &self.scorer,
        )
        .map_err(|e| InferenceError::Backend(e.to_string()))?;
        let label = result.label.as_binary().ok_or_else(|| {
            InferenceError::Backend(format!("label {} is not binary", result.label))
        })?;
        Ok(serde_json::json!({"label": label, "evidence": result.evidence.join("; ")}).to_string())
    }

    fn identity(&self) -> &str {
        &self.name
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct WireReply {
    text: String,
}

/// JSON over HTTP: `POST {model, prompt, temperature, max_tokens, seed?}`,
/// reply `{text}`.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    agent: ureq::Agent,
}

pub const ENDPOINT_VAR: &str = "LSKETCH_ENDPOINT";
pub const API_KEY_VAR: &str = "LSKETCH_API_KEY";
pub const MODEL_VAR: &str = "LSKETCH_MODEL";

impl HttpBackend {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        HttpBackend {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            agent,
        }
    }

    /// Reads the endpoint, model and key from `LSKETCH_*` variables.
    pub fn from_env() -> Result<Self, InferenceError> {
        let endpoint = std::env::var(ENDPOINT_VAR)
            .map_err(|_| InferenceError::Config(format!("{ENDPOINT_VAR} is not set")))?;
        let model = std::env::var(MODEL_VAR).unwrap_or_else(|_| "default".into());
        Ok(HttpBackend::new(
            endpoint,
            model,
            std::env::var(API_KEY_VAR).ok(),
        ))
    }
}

fn map_ureq(e: ureq::Error) -> InferenceError {
    match e {
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => InferenceError::Transport {
            attempts: 1,
            message: format!("HTTP {code}"),
        },
        ureq::Error::StatusCode(code) => InferenceError::Backend(format!("HTTP {code}")),
        ureq::Error::Json(e) => InferenceError::Backend(format!("malformed reply: {e}")),
        ureq::Error::BadUri(uri) => InferenceError::Config(format!("bad endpoint {uri}")),
        other => InferenceError::Transport {
            attempts: 1,
            message: other.to_string(),
        },
    }
}

impl Backend for HttpBackend {
    fn generate(&self, prompt: &str, config: &DecodingConfig) -> Result<String, InferenceError> {
        let body = WireRequest {
            model: &self.model,
            prompt,
            temperature: config.temperature,
            max_tokens: config.max_output_tokens,
            seed: config.seed,
        };
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(&body).map_err(map_ureq)?;
        let reply: WireReply = response.body_mut().read_json().map_err(map_ureq)?;
        Ok(reply.text)
    }

    fn identity(&self) -> &str {
        &self.model
    }
}

/// Similarity scores requested from a backend: the reply must be a number in
/// `[0, 1]`, bare or as `{"score": x}`.
pub struct BackendScorer<B> {
    backend: B,
    config: DecodingConfig,
}

impl<B: Backend> BackendScorer<B> {
    pub fn new(backend: B, config: DecodingConfig) -> Self {
        BackendScorer { backend, config }
    }
}

impl<B: Backend> SemanticScorer for BackendScorer<B> {
    fn score(&self, query: &str, text: &str) -> Result<f64, ScorerError> {
        let prompt = format!(
            "Rate how closely the text matches the description, from 0 (unrelated) to 1 (same meaning). Reply with the number only.\nDescription: {}\nText: {}",
            serde_json::to_string(query).expect("string"),
            serde_json::to_string(text).expect("string"),
        );
        let reply = self
            .backend
            .generate(&prompt, &self.config)
            .map_err(|e| ScorerError(e.to_string()))?;
        let trimmed = reply.trim();
        trimmed
            .parse::<f64>()
            .ok()
            .or_else(|| {
                serde_json::from_str::<Json>(trimmed)
                    .ok()
                    .and_then(|v| v.get("score").and_then(Json::as_f64))
            })
            .ok_or_else(|| ScorerError(format!("unusable score reply {trimmed:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::JaccardScorer;
    use crate::prompt::{render_compiler_metaprompt, render_zero_shot};
    use crate::sketch::parse_sketch;
    use std::sync::atomic::{AtomicU32, Ordering};

    #[test]
    fn parse_examples() {
        let p = parse_strict_json(r#"{"label": 1, "evidence": "caused by"}"#, false);
        assert_eq!(
            (p.label, p.evidence.as_deref()),
            (Some(1), Some("caused by"))
        );
        let p = parse_strict_json("```json\n{\"label\": 0}\n```", false);
        assert_eq!((p.label, p.evidence), (Some(0), None));
        assert!(parse_strict_json("I think the answer is maybe", false).is_invalid());
        assert_eq!(
            parse_strict_json("I think the answer is maybe", false).raw,
            "I think the answer is maybe"
        );
    }

    #[test]
    fn parse_variants() {
        assert_eq!(parse_strict_json(" 1\n", true).label, Some(1));
        assert_eq!(parse_strict_json("0", true).label, Some(0));
        assert_eq!(parse_strict_json("1", false).label, None);
        assert_eq!(
            parse_strict_json("Answer: {\"label\": true} done", false).label,
            Some(1)
        );
        assert_eq!(parse_strict_json("{\"label\": 2}", false).label, None);
        assert_eq!(parse_strict_json("{\"label\": \"1\"}", false).label, None);
        assert_eq!(
            parse_strict_json("{\"x\": {\"label\": 1}}", false).label,
            None
        );
        assert_eq!(
            parse_strict_json("{bad {\"label\": 1}", false).label,
            Some(1)
        );
        let p = parse_strict_json("{\"label\": 1, \"evidence\": [\"a\"]}", false);
        assert_eq!(p.evidence.as_deref(), Some("[\"a\"]"));
    }

    #[test]
    fn strict_determinism_rejects_sampling() {
        let stub = StubBackend::new("1");
        let hot = DecodingConfig {
            temperature: 0.7,
            ..Default::default()
        };
        assert!(matches!(
            Classifier::new(&stub, hot.clone(), true),
            Err(InferenceError::Config(_))
        ));
        assert!(Classifier::new(&stub, hot, false).is_ok());
        let defaults = DecodingConfig::default();
        assert_eq!(defaults.temperature, 0.0);
        assert!(defaults.top_p_disabled && defaults.top_k_disabled && defaults.seed.is_none());
    }

    #[test]
    fn stub_pass_through() {
        let prompt = render_zero_shot(&TaskInstance::sentence("x")).unwrap();
        let stub = StubBackend::new(r#"{"label": 1, "evidence": "due to"}"#);
        let p = classify(&stub, &prompt, &DecodingConfig::default()).unwrap();
        assert_eq!(p.label, Some(1));
        let garbage = StubBackend::new("¯\\_(ツ)_/¯");
        assert!(classify(&garbage, &prompt, &DecodingConfig::default())
            .unwrap()
            .is_invalid());
        let meta = render_compiler_metaprompt("x").unwrap();
        assert!(classify(&stub, &meta, &DecodingConfig::default()).is_err());
    }

    struct Flaky {
        calls: AtomicU32,
        fail_first: u32,
    }

    impl Backend for Flaky {
        fn generate(&self, _: &str, _: &DecodingConfig) -> Result<String, InferenceError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(InferenceError::Transport {
                    attempts: 1,
                    message: "reset".into(),
                })
            } else {
                Ok("garbage".into())
            }
        }

        fn identity(&self) -> &str {
            "flaky"
        }
    }

    #[test]
    fn transport_retries_but_parse_failures_do_not() {
        let prompt = render_zero_shot(&TaskInstance::sentence("x")).unwrap();
        let fast = RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
        };
        let b = Flaky {
            calls: AtomicU32::new(0),
            fail_first: 2,
        };
        let c = Classifier::new(&b, DecodingConfig::default(), true)
            .unwrap()
            .with_retry(fast);
        assert!(c.classify(&prompt).unwrap().is_invalid());
        assert_eq!(b.calls.load(Ordering::SeqCst), 3);

        let b = Flaky {
            calls: AtomicU32::new(0),
            fail_first: 10,
        };
        let c = Classifier::new(&b, DecodingConfig::default(), true)
            .unwrap()
            .with_retry(fast);
        assert_eq!(
            c.classify(&prompt).unwrap_err(),
            InferenceError::Transport {
                attempts: 3,
                message: "reset".into()
            }
        );
        assert_eq!(b.calls.load(Ordering::SeqCst), 3);
    }

    fn relation_doc() -> SketchDocument {
        parse_sketch(include_str!("../fixtures/ade_relation.sketch")).unwrap()
    }

    #[test]
    fn oracle_matches_sketch() {
        let doc = relation_doc();
        let oracle = sketch_oracle_backend(doc.clone(), JaccardScorer);
        for (text, want) in [
            ("The patient developed rash after starting amoxicillin.", 1),
            ("Amoxicillin did not cause any rash in the patient.", 0),
        ] {
            let inst = TaskInstance::relation(text, "amoxicillin", "rash");
            let prompt = render(Strategy::Lsp, Some(&doc), &inst).unwrap();
            let p = classify(&oracle, &prompt, &DecodingConfig::default()).unwrap();
            assert_eq!(p.label, Some(want));
        }
        let bare = RenderedPrompt {
            strategy: Strategy::Brief,
            text: "no marker".into(),
            schema: OutputSchema::LabelJson,
        };
        assert_eq!(
            classify(&oracle, &bare, &DecodingConfig::default()).unwrap_err(),
            InferenceError::MissingMarker
        );
    }

    #[test]
    fn corpus_keeps_order_and_raw() {
        let doc = relation_doc();
        let oracle = sketch_oracle_backend(doc.clone(), JaccardScorer);
        let items: Vec<DatasetItem> = (0..20)
            .map(|i| DatasetItem {
                id: format!("r{i}"),
                text: if i % 3 == 0 {
                    "The patient developed rash after starting amoxicillin.".into()
                } else {
                    "Amoxicillin did not cause any rash in the patient.".into()
                },
                drug: Some("amoxicillin".into()),
                effect: Some("rash".into()),
                label: 0,
            })
            .collect();
        let c = Classifier::new(&oracle, DecodingConfig::default(), true).unwrap();
        let opts = ClassifyOptions {
            keep_raw: true,
            ..Default::default()
        };
        let out = classify_corpus(&c, Some(&doc), &items, opts).unwrap();
        assert_eq!(out.transport_failures, 0);
        let ids: Vec<_> = out
            .predictions
            .records
            .iter()
            .map(|r| r.id.clone())
            .collect();
        let want: Vec<_> = items.iter().map(|i| i.id.clone()).collect();
        assert_eq!(ids, want);
        assert!(out.predictions.records.iter().all(|r| r.raw.is_some()));
        assert_eq!(out.predictions.records[0].label, 1);
        assert_eq!(out.predictions.records[1].label, 0);
    }

    #[test]
    fn backend_scorer_reads_numbers() {
        let s = BackendScorer::new(StubBackend::new("0.75"), DecodingConfig::default());
        assert_eq!(s.score("a", "b").unwrap(), 0.75);
        let s = BackendScorer::new(
            StubBackend::new("{\"score\": 0.5}"),
            DecodingConfig::default(),
        );
        assert_eq!(s.score("a", "b").unwrap(), 0.5);
        let s = BackendScorer::new(StubBackend::new("high"), DecodingConfig::default());
        assert!(s.score("a", "b").is_err());
    }
}
