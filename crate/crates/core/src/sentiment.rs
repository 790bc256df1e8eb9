//! Sentence sentiment scoring.
//!
//! The built-in scorer is a deterministic lexicon counter with negation
//! flipping. `ExternalScorer` talks to a remote sentiment service that returns
//! the same (positive, neutral, negative) confidence triple.

use std::fmt;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicons::{base_form, Lexica, SentimentLexicon, WordList};
use crate::normalize::{is_punctuation_token, tokenize};
use crate::num::Scalar;

pub const SCORE_SUM_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_NEGATION_SCOPE: usize = 3;

/// Standalone dialectal negator.
pub const DIALECT_NEGATORS: &[&str] = &["مش"];
/// Standalone standard-Arabic negators.
pub const STANDARD_NEGATORS: &[&str] = &["لا", "لم", "لن", "ليس", "ليست", "غير"];
pub const ENGLISH_NEGATORS: &[&str] = &["not", "n't", "no", "never", "cannot"];

pub const ENDPOINT_ENV: &str = "SENTI_ENDPOINT";
pub const KEY_ENV: &str = "SENTI_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("invalid sentiment score: {0}")]
    InvalidScore(String),
    #[error("scorer configuration: {0}")]
    Config(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("scorer returned HTTP {0}")]
    Status(u16),
    #[error("unexpected response: {0}")]
    Schema(String),
}

/// A (positive, neutral, negative) confidence triple summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score<T> {
    pub positive: T,
    pub neutral: T,
    pub negative: T,
}

impl<T: Scalar> Score<T> {
    pub fn new(positive: T, neutral: T, negative: T) -> Result<Self, ScoreError> {
        let s = Self { positive, neutral, negative };
        s.validate()?;
        Ok(s)
    }

    pub fn neutral_only() -> Self {
        Self { positive: T::zero(), neutral: T::one(), negative: T::zero() }
    }

    pub fn sum(&self) -> T {
        self.positive + self.neutral + self.negative
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        let tol = T::of(SCORE_SUM_TOLERANCE).max(T::epsilon() * T::of(4.0));
        for (name, v) in [("positive", self.positive), ("neutral", self.neutral), ("negative", self.negative)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(ScoreError::InvalidScore(format!("{name} component {v} outside [0, 1]")));
            }
        }
        if (self.sum() - T::one()).abs() > tol {
            return Err(ScoreError::InvalidScore(format!("components sum to {}", self.sum())));
        }
        Ok(())
    }

    /// Scales a non-negative triple so it sums to 1.
    pub fn renormalized(positive: T, neutral: T, negative: T) -> Result<Self, ScoreError> {
        let parts = [positive, neutral, negative];
        if parts.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(ScoreError::InvalidScore(format!("components must be finite and non-negative: ({positive}, {neutral}, {negative})")));
        }
        let total = positive + neutral + negative;
        if total <= T::zero() {
            return Err(ScoreError::InvalidScore("components sum to zero".into()));
        }
        Ok(Self { positive: positive / total, neutral: neutral / total, negative: negative / total })
    }

    pub fn cast<U: Scalar>(&self) -> Score<U> {
        Score { positive: U::of(self.positive.as_f64()), neutral: U::of(self.neutral.as_f64()), negative: U::of(self.negative.as_f64()) }
    }
}

/// How a triple is reduced to the scalar compared by the sentence-level cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMode {
    PositiveClass,
    NegativeClass,
    Signed,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::PositiveClass => "positive_class",
            ScalarMode::NegativeClass => "negative_class",
            ScalarMode::Signed => "signed",
        }
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalarMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive_class" | "positive" => Ok(ScalarMode::PositiveClass),
            "negative_class" | "negative" => Ok(ScalarMode::NegativeClass),
            "signed" => Ok(ScalarMode::Signed),
            other => Err(format!("unknown scalar mode {other:?} (expected positive_class, negative_class or signed)")),
        }
    }
}

pub fn polarity_scalar<T: Scalar>(score: &Score<T>, mode: ScalarMode) -> T {
    match mode {
        ScalarMode::PositiveClass => score.positive,
        ScalarMode::NegativeClass => score.negative,
        ScalarMode::Signed => score.positive - score.negative,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegatorKind {
    /// Standalone dialectal particle such as مش.
    Dialect,
    /// Dialectal ma-...-sh wrapped around a verb.
    Circumfix,
    /// Standard Arabic particle.
    Standard,
    English,
}

impl NegatorKind {
    pub fn is_dialectal(self) -> bool {
        matches!(self, NegatorKind::Dialect | NegatorKind::Circumfix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegatorSpan {
    pub negator_index: usize,
    pub scope_indices: Vec<usize>,
    pub kind: NegatorKind,
}

/// Finds negators and the tokens they scope over.
#[derive(Debug, Clone)]
pub struct NegationDetector {
    verb_stems: WordList,
    function_words: WordList,
    scope: usize,
}

impl NegationDetector {
    pub fn new(verb_stems: WordList, function_words: WordList, scope: usize) -> Self {
        Self { verb_stems, function_words, scope }
    }

    pub fn from_lexica(lexica: &Lexica) -> Self {
        Self::new(lexica.verb_stems.clone(), lexica.function_words.clone(), DEFAULT_NEGATION_SCOPE)
    }

    pub fn builtin() -> Self {
        Self::from_lexica(&Lexica::builtin())
    }

    pub fn with_scope(mut self, scope: usize) -> Self {
        self.scope = scope;
        self
    }

    fn standalone_kind(token: &str) -> Option<NegatorKind> {
        if DIALECT_NEGATORS.contains(&token) {
            Some(NegatorKind::Dialect)
        } else if STANDARD_NEGATORS.contains(&token) {
            Some(NegatorKind::Standard)
        } else if ENGLISH_NEGATORS.contains(&token.to_lowercase().as_str()) {
            Some(NegatorKind::English)
        } else {
            None
        }
    }

    /// ma-<verb>-sh: starts with م, ends with ش, at least four letters, and the
    /// interior (optionally after a long alef) starts with a known verb stem.
    pub fn is_circumfix(&self, token: &str) -> bool {
        let chars: Vec<char> = token.chars().collect();
        if chars.len() < 4 || chars[0] != 'م' || chars[chars.len() - 1] != 'ش' {
            return false;
        }
        let interior: String = chars[1..chars.len() - 1].iter().collect();
        let interior = interior.strip_prefix('ا').unwrap_or(&interior);
        self.verb_stems.iter().any(|stem| interior.starts_with(stem))
    }

    fn is_content(&self, token: &str) -> bool {
        !is_punctuation_token(token) && !self.function_words.contains(&token.to_lowercase()) && Self::standalone_kind(token).is_none()
    }

    pub fn detect(&self, tokens: &[String]) -> Vec<NegatorSpan> {
        let mut spans = Vec::new();
        for (i, raw) in tokens.iter().enumerate() {
            let token = base_form(raw);
            if let Some(kind) = Self::standalone_kind(token) {
                let mut scope = Vec::new();
                for (j, t) in tokens.iter().enumerate().skip(i + 1) {
                    if scope.len() == self.scope || is_punctuation_token(t) {
                        break;
                    }
                    if self.is_content(base_form(t)) {
                        scope.push(j);
                    }
                }
                if !scope.is_empty() {
                    spans.push(NegatorSpan { negator_index: i, scope_indices: scope, kind });
                }
            } else if self.is_circumfix(token) {
                spans.push(NegatorSpan { negator_index: i, scope_indices: vec![i], kind: NegatorKind::Circumfix });
            }
        }
        spans
    }
}

pub fn detect_negators(tokens: &[String]) -> Vec<NegatorSpan> {
    NegationDetector::builtin().detect(tokens)
}

/// Sign flip applied to a lexicon hit inside a negator scope.
pub fn flip(weight: i8) -> i8 {
    -weight
}

/// Splits English contractions so the negator becomes its own token.
fn expand_contractions(text: &str) -> String {
    text.to_lowercase().replace("cannot", "can not").replace("n't", " not").replace("n’t", " not")
}

/// Neutral mass 1/(1+hits); the remainder is split in proportion to positive and negative hits.
pub fn score_from_counts<T: Scalar>(positive_hits: usize, negative_hits: usize) -> Score<T> {
    let total = positive_hits + negative_hits;
    if total == 0 {
        return Score::neutral_only();
    }
    let total_t = T::of(total as f64);
    let neutral = T::one() / (T::one() + total_t);
    let rest = T::one() - neutral;
    let positive = rest * T::of(positive_hits as f64) / total_t;
    let negative = rest * T::of(negative_hits as f64) / total_t;
    Score { positive, neutral, negative }
}

/// Anything that maps a sentence to a sentiment triple.
pub trait SentenceScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<Score<f64>, ScoreError>;

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<Score<f64>>, ScoreError> {
        texts.iter().map(|t| self.score(t)).collect()
    }
}

impl<S: SentenceScorer + ?Sized> SentenceScorer for &S {
    fn score(&self, text: &str) -> Result<Score<f64>, ScoreError> {
        (**self).score(text)
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<Score<f64>>, ScoreError> {
        (**self).score_batch(texts)
    }
}

impl<S: SentenceScorer + ?Sized> SentenceScorer for Box<S> {
    fn score(&self, text: &str) -> Result<Score<f64>, ScoreError> {
        (**self).score(text)
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<Score<f64>>, ScoreError> {
        (**self).score_batch(texts)
    }
}

/// Deterministic lexicon scorer.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: SentimentLexicon,
    negation: NegationDetector,
}

impl LexiconScorer {
    pub fn new(lexicon: SentimentLexicon, negation: NegationDetector) -> Self {
        Self { lexicon, negation }
    }

    pub fn from_lexica(lexica: &Lexica) -> Self {
        Self::new(lexica.sentiment.clone(), NegationDetector::from_lexica(lexica))
    }

    pub fn builtin() -> Self {
        Self::from_lexica(&Lexica::builtin())
    }

    pub fn lexicon(&self) -> &SentimentLexicon {
        &self.lexicon
    }

    /// Positive and negative hit counts after negation flipping.
    pub fn hit_counts(&self, text: &str) -> (usize, usize) {
        let tokens = tokenize(&expand_contractions(text));
        let spans = self.negation.detect(&tokens);
        let (mut pos, mut neg) = (0, 0);
        for (i, t) in tokens.iter().enumerate() {
            let Some(mut w) = self.lexicon.weight(base_form(t)) else { continue };
            for span in &spans {
                if span.scope_indices.contains(&i) {
                    w = flip(w);
                }
            }
            if w > 0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        (pos, neg)
    }

    pub fn score_text<T: Scalar>(&self, text: &str) -> Score<T> {
        let (p, n) = self.hit_counts(text);
        score_from_counts(p, n)
    }
}

impl SentenceScorer for LexiconScorer {
    fn score(&self, text: &str) -> Result<Score<f64>, ScoreError> {
        Ok(self.score_text(text))
    }
}

/// Scores with the given lexicon and the shipped negation resources.
pub fn score_sentence(text: &str, lexicon: &SentimentLexicon) -> Score<f64> {
    let lexica = Lexica::builtin();
    LexiconScorer::new(lexicon.clone(), NegationDetector::from_lexica(&lexica)).score_text(text)
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(max: usize) -> Self {
        Self { max: max.max(1), current: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.current.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.current.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Clone, Serialize)]
struct RequestDocument<'a> {
    id: String,
    text: &'a str,
}

#[derive(Debug, Serialize)]
struct RequestBody<'a> {
    documents: Vec<RequestDocument<'a>>,
}

#[derive(Debug, Deserialize)]
struct Confidences {
    positive: f64,
    neutral: f64,
    negative: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DocumentScores {
    Nested {
        #[serde(rename = "confidenceScores")]
        confidence_scores: Confidences,
    },
    Flat(Confidences),
}

#[derive(Debug, Deserialize)]
struct ResponseDocument {
    id: String,
    #[serde(flatten)]
    scores: DocumentScores,
}

#[derive(Debug, Deserialize)]
struct ResponseBody {
    documents: Vec<ResponseDocument>,
}

#[derive(Debug, Clone)]
pub struct ExternalScorerConfig {
    pub endpoint: String,
    pub key: Option<String>,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// When set, a remote triple whose sum is further than this from 1 is rejected
    /// instead of renormalized.
    pub strict_sum_tolerance: Option<f64>,
}

impl ExternalScorerConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), key: None, timeout: Duration::from_secs(30), max_in_flight: 4, strict_sum_tolerance: None }
    }

    /// Endpoint from `SENTI_ENDPOINT`, key from `SENTI_KEY`.
    pub fn from_env() -> Result<Self, ScoreError> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| ScoreError::Config(format!("{ENDPOINT_ENV} is not set")))?;
        let mut cfg = Self::new(endpoint);
        cfg.key = std::env::var(KEY_ENV).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

/// HTTP client for a remote sentiment service.
///
/// Request: `POST {"documents":[{"id","text"}]}`. Response: per-document
/// `positive`/`neutral`/`negative` confidences, either at the top level of the
/// document object or under `confidenceScores`. Failures are surfaced as
/// errors; there is no fallback to the built-in scorer.
#[derive(Debug)]
pub struct ExternalScorer {
    config: ExternalScorerConfig,
    client: reqwest::blocking::Client,
    in_flight: InFlight,
}

impl ExternalScorer {
    pub fn new(config: ExternalScorerConfig) -> Result<Self, ScoreError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ScoreError::Config(e.to_string()))?;
        let in_flight = InFlight::new(config.max_in_flight);
        Ok(Self { config, client, in_flight })
    }

    pub fn from_env() -> Result<Self, ScoreError> {
        Self::new(ExternalScorerConfig::from_env()?)
    }

    fn convert(&self, c: &Confidences) -> Result<Score<f64>, ScoreError> {
        if let Some(tol) = self.config.strict_sum_tolerance {
            let sum = c.positive + c.neutral + c.negative;
            if (sum - 1.0).abs() > tol {
                return Err(ScoreError::Schema(format!("confidences sum to {sum}, not within {tol} of 1")));
            }
        }
        Score::renormalized(c.positive, c.neutral, c.negative).map_err(|e| ScoreError::Schema(e.to_string()))
    }
}

impl SentenceScorer for ExternalScorer {
    fn score(&self, text: &str) -> Result<Score<f64>, ScoreError> {
        Ok(self.score_batch(&[text])?.remove(0))
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<Score<f64>>, ScoreError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = RequestBody { documents: texts.iter().enumerate().map(|(i, t)| RequestDocument { id: i.to_string(), text: t }).collect() };
        let _permit = self.in_flight.acquire();
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.config.key {
            req = req.header("Ocp-Apim-Subscription-Key", key);
        }
        let resp = req.send().map_err(|e| ScoreError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ScoreError::Status(status.as_u16()));
        }
        let parsed: ResponseBody = resp.json().map_err(|e| ScoreError::Schema(e.to_string()))?;
        let mut out = vec![None; texts.len()];
        for doc in parsed.documents {
            let idx: usize = doc.id.parse().ok().filter(|&i| i < texts.len()).ok_or_else(|| ScoreError::Schema(format!("unknown document id {:?}", doc.id)))?;
            let c = match &doc.scores {
                DocumentScores::Nested { confidence_scores } => confidence_scores,
                DocumentScores::Flat(c) => c,
            };
            out[idx] = Some(self.convert(c)?);
        }
        out.into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| ScoreError::Schema(format!("no scores for document {i}"))))
            .collect()
    }
}

/// Scores one text with an external client.
pub fn external_score(text: &str, client: &ExternalScorer) -> Result<Score<f64>, ScoreError> {
    client.score(text)
}
