//! Rating-versus-score discrepancy extraction and the error typology classifier.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::lexicons::{ContronymLexicon, Lexica, PhraseLexicon, SentimentLexicon, WordList};
use crate::normalize::{prepare_source, tokenize, TokenSequence};
use crate::sentiment::{NegationDetector, Score, ScoreError, SentenceScorer};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("record {0:?} has no mt_text")]
    MissingMt(String),
    #[error("flag refers to unknown record {0:?}")]
    UnknownItem(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Which way the translation's sentiment went wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// High rating, negative translation.
    WrongNegative,
    /// Low rating, positive translation.
    WrongPositive,
}

/// Error typology. Variant order is the priority order used to pick a primary category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    Negation,
    Contronym,
    Idiom,
    Diacritic,
    DialectExpression,
    Unknown,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 6] = [
        ErrorCategory::Negation,
        ErrorCategory::Contronym,
        ErrorCategory::Idiom,
        ErrorCategory::Diacritic,
        ErrorCategory::DialectExpression,
        ErrorCategory::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Negation => "Negation",
            ErrorCategory::Contronym => "Contronym",
            ErrorCategory::Idiom => "Idiom",
            ErrorCategory::Diacritic => "Diacritic",
            ErrorCategory::DialectExpression => "DialectExpression",
            ErrorCategory::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown error category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyFlag {
    pub item_id: String,
    pub direction: Direction,
    pub rating: u8,
    pub score: Score<f64>,
    pub categories: Vec<ErrorCategory>,
    pub primary_category: ErrorCategory,
}

impl DiscrepancyFlag {
    /// Re-checks the direction invariant from the stored rating and score.
    pub fn satisfies(&self, thresholds: &Thresholds) -> bool {
        let category_ok = self.categories.is_empty() || self.categories.contains(&self.primary_category);
        category_ok
            && match self.direction {
                Direction::WrongNegative => self.rating >= thresholds.positive_min_rating && self.score.negative >= thresholds.cutoff,
                Direction::WrongPositive => self.rating <= thresholds.negative_max_rating && self.score.positive >= thresholds.cutoff,
            }
    }
}

/// Rating bands and score cutoff for discrepancy extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Ratings at or above this are positive reviews.
    pub positive_min_rating: u8,
    /// Ratings at or below this are negative reviews.
    pub negative_max_rating: u8,
    pub cutoff: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { positive_min_rating: 4, negative_max_rating: 2, cutoff: 0.5 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(DetectError::InvalidThresholds(format!("cutoff {} not in (0, 1)", self.cutoff)));
        }
        let in_range = |r: u8| (1..=5).contains(&r);
        if !in_range(self.positive_min_rating) || !in_range(self.negative_max_rating) {
            return Err(DetectError::InvalidThresholds("rating bands must lie within 1..=5".into()));
        }
        if self.negative_max_rating >= self.positive_min_rating {
            return Err(DetectError::InvalidThresholds(format!(
                "negative band (<= {}) overlaps positive band (>= {})",
                self.negative_max_rating, self.positive_min_rating
            )));
        }
        Ok(())
    }

    pub fn direction(&self, rating: u8, score: &Score<f64>) -> Option<Direction> {
        if rating >= self.positive_min_rating && score.negative >= self.cutoff {
            Some(Direction::WrongNegative)
        } else if rating <= self.negative_max_rating && score.positive >= self.cutoff {
            Some(Direction::WrongPositive)
        } else {
            None
        }
    }
}

/// Scores every record's translation and flags rating/score mismatches, in corpus order.
/// Flags come back unclassified (no categories, primary `Unknown`).
pub fn flag_discrepancies(corpus: &Corpus, scorer: &dyn SentenceScorer, thresholds: &Thresholds) -> Result<Vec<DiscrepancyFlag>, DetectError> {
    thresholds.validate()?;
    let mut texts = Vec::with_capacity(corpus.len());
    for r in corpus.records() {
        texts.push(r.mt_text.as_deref().ok_or_else(|| DetectError::MissingMt(r.id.clone()))?);
    }
    let scores = scorer.score_batch(&texts)?;
    Ok(corpus
        .records()
        .iter()
        .zip(scores)
        .filter_map(|(r, score)| {
            thresholds.direction(r.rating, &score).map(|direction| DiscrepancyFlag {
                item_id: r.id.clone(),
                direction,
                rating: r.rating,
                score,
                categories: Vec::new(),
                primary_category: ErrorCategory::Unknown,
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub categories: Vec<ErrorCategory>,
    pub primary: ErrorCategory,
}

/// Rule-based typology classifier over the shipped or user lexica.
#[derive(Debug, Clone)]
pub struct Classifier {
    contronyms: ContronymLexicon,
    idioms: PhraseLexicon,
    dialect_expressions: PhraseLexicon,
    diacritic_ambiguous: PhraseLexicon,
    sentiment: SentimentLexicon,
    function_words: WordList,
    negation: NegationDetector,
}

impl Classifier {
    pub fn new(lexica: &Lexica) -> Self {
        Self {
            contronyms: lexica.contronyms.clone(),
            idioms: lexica.idioms.clone(),
            dialect_expressions: lexica.dialect_expressions.clone(),
            diacritic_ambiguous: lexica.diacritic_ambiguous.clone(),
            sentiment: lexica.sentiment.clone(),
            function_words: lexica.function_words.clone(),
            negation: NegationDetector::from_lexica(lexica),
        }
    }

    /// Capitalized, at least four letters, not sentence-initial, and unknown to the
    /// English word lists: the shape of a dialect word left untranslated.
    pub fn transliterations(&self, target_text: &str) -> Vec<String> {
        let tokens = tokenize(target_text);
        let mut out = Vec::new();
        let mut sentence_start = true;
        for t in tokens.iter() {
            if matches!(t.as_str(), "." | "!" | "?") {
                sentence_start = true;
                continue;
            }
            let initial = std::mem::replace(&mut sentence_start, false);
            let mut chars = t.chars();
            let Some(first) = chars.next() else { continue };
            let looks_transliterated = first.is_ascii_uppercase()
                && t.chars().count() >= 4
                && chars.all(|c| c.is_ascii_lowercase())
                && !self.sentiment.contains(&t.to_lowercase())
                && !self.function_words.contains(&t.to_lowercase());
            if looks_transliterated && !initial {
                out.push(t.clone());
            }
        }
        out
    }

    pub fn classify(&self, source_tokens: &[String], target_text: &str) -> Classification {
        let mut categories = Vec::new();
        if self.negation.detect(source_tokens).iter().any(|s| s.kind.is_dialectal()) {
            categories.push(ErrorCategory::Negation);
        }
        if !self.contronyms.find_contronyms(source_tokens).is_empty() {
            categories.push(ErrorCategory::Contronym);
        }
        if !self.idioms.match_phrases(source_tokens).is_empty() {
            categories.push(ErrorCategory::Idiom);
        }
        if !self.diacritic_ambiguous.match_phrases(source_tokens).is_empty() {
            categories.push(ErrorCategory::Diacritic);
        }
        if !self.dialect_expressions.match_phrases(source_tokens).is_empty() || !self.transliterations(target_text).is_empty() {
            categories.push(ErrorCategory::DialectExpression);
        }
        if categories.is_empty() {
            categories.push(ErrorCategory::Unknown);
        }
        let primary = categories[0];
        Classification { categories, primary }
    }
}

/// Classifies a flag and stores the result on it.
pub fn classify_error(flag: &mut DiscrepancyFlag, source_tokens: &TokenSequence, target_text: &str, classifier: &Classifier) -> Classification {
    let c = classifier.classify(source_tokens, target_text);
    flag.categories = c.categories.clone();
    flag.primary_category = c.primary;
    c
}

/// Classifies every flag against its record's normalized source and translation.
pub fn classify_flags(corpus: &Corpus, flags: &[DiscrepancyFlag], classifier: &Classifier) -> Result<Vec<DiscrepancyFlag>, DetectError> {
    flags
        .iter()
        .map(|flag| {
            let record = corpus.get(&flag.item_id).ok_or_else(|| DetectError::UnknownItem(flag.item_id.clone()))?;
            let mt = record.mt_text.as_deref().ok_or_else(|| DetectError::MissingMt(record.id.clone()))?;
            let c = classifier.classify(&prepare_source(&record.source_text), mt);
            Ok(DiscrepancyFlag { categories: c.categories, primary_category: c.primary, ..flag.clone() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub category: ErrorCategory,
    pub count: usize,
    pub proportion: f64,
}

/// Primary-category histogram, in category priority order, zero counts omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub total: usize,
    pub entries: Vec<FrequencyEntry>,
}

impl FrequencyReport {
    pub fn count(&self, category: ErrorCategory) -> usize {
        self.entries.iter().find(|e| e.category == category).map_or(0, |e| e.count)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,count,proportion\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.category, e.count, e.proportion));
        }
        out
    }
}

pub fn frequency_report(flags: &[DiscrepancyFlag]) -> FrequencyReport {
    let mut counts: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for f in flags {
        *counts.entry(f.primary_category).or_default() += 1;
    }
    let total = flags.len();
    FrequencyReport {
        total,
        entries: counts
            .into_iter()
            .map(|(category, count)| FrequencyEntry { category, count, proportion: count as f64 / total as f64 })
            .collect(),
    }
}
