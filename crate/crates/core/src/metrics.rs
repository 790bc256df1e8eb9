//! Translation metrics: corpus BLEU, word-level contronym polarity
//! precision/recall/F1, and the sentence-level sentiment cost (mean squared
//! distance between target and reference sentiment scalars).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{apply_annotations, Corpus, CorpusError};
use crate::detect::Thresholds;
use crate::lexicons::{ContronymEntry, ContronymLexicon, PolarityTag};
use crate::normalize::prepare_source;
use crate::num::Scalar;
use crate::sentiment::{polarity_scalar, ScalarMode, ScoreError, SentenceScorer};

pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("empty input")]
    Empty,
    #[error("records without reference_text: {}", .0.join(", "))]
    MissingReferences(Vec<String>),
    #[error("records without mt_text: {}", .0.join(", "))]
    MissingMt(Vec<String>),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

static PUNCT_SPLIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap());
static PERIOD_COMMA_AFTER_NON_DIGIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([^0-9])([\.,])").unwrap());
static PERIOD_COMMA_BEFORE_NON_DIGIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([\.,])([^0-9])").unwrap());
static DASH_AFTER_DIGIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([0-9])(-)").unwrap());

/// Metric-internal tokenization of detokenized text (the "13a" scheme), lowercased.
pub fn bleu_tokenize(line: &str) -> Vec<String> {
    let mut s = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if s.contains('&') {
        s = s.replace("&quot;", "\"").replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">");
    }
    let s = format!(" {} ", s.to_lowercase());
    let s = PUNCT_SPLIT.replace_all(&s, " $1 ");
    let s = PERIOD_COMMA_AFTER_NON_DIGIT.replace_all(&s, "$1 $2 ");
    let s = PERIOD_COMMA_BEFORE_NON_DIGIT.replace_all(&s, " $1 $2");
    let s = DASH_AFTER_DIGIT.replace_all(&s, "$1 $2 ");
    s.split_whitespace().map(String::from).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Add one to numerator and denominator of the 2..4-gram precisions.
    AddOne,
}

/// Sufficient statistics and result of a corpus BLEU computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0..=100.
    pub score: f64,
    pub matches: [usize; MAX_NGRAM],
    pub totals: [usize; MAX_NGRAM],
    pub precisions: [f64; MAX_NGRAM],
    pub brevity_penalty: f64,
    pub hypothesis_length: usize,
    pub reference_length: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn corpus_bleu_stats(hypotheses: &[&str], references: &[&str], smoothing: Smoothing) -> Result<BleuScore, MetricError> {
    if hypotheses.len() != references.len() {
        return Err(MetricError::LengthMismatch { hypotheses: hypotheses.len(), references: references.len() });
    }
    if hypotheses.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut matches = [0usize; MAX_NGRAM];
    let mut totals = [0usize; MAX_NGRAM];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (h, r) in hypotheses.iter().zip(references) {
        let h = bleu_tokenize(h);
        let r = bleu_tokenize(r);
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_NGRAM {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            totals[n - 1] += h.len().saturating_sub(n - 1);
            matches[n - 1] += hc.iter().map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0))).sum::<usize>();
        }
    }
    let mut precisions = [0.0; MAX_NGRAM];
    for n in 0..MAX_NGRAM {
        precisions[n] = match smoothing {
            Smoothing::AddOne if n > 0 => (matches[n] + 1) as f64 / (totals[n] + 1) as f64,
            _ if totals[n] == 0 => 0.0,
            _ => matches[n] as f64 / totals[n] as f64,
        };
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if precisions.iter().any(|&p| p == 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_NGRAM as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore { score, matches, totals, precisions, brevity_penalty, hypothesis_length: hyp_len, reference_length: ref_len })
}

/// Corpus BLEU on the 0..=100 scale, no smoothing.
pub fn corpus_bleu(hypotheses: &[&str], references: &[&str]) -> Result<f64, MetricError> {
    Ok(corpus_bleu_stats(hypotheses, references, Smoothing::None)?.score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Pos,
    Neg,
    Unmatched,
}

fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Which sense of the contronym the translation rendered, by gloss lookup on
/// lowercased word boundaries. Both senses present, or neither, is `Unmatched`.
pub fn predict_polarity(target_text: &str, entry: &ContronymEntry) -> Prediction {
    let target = words(target_text);
    let hit = |glosses: &std::collections::BTreeSet<String>| glosses.iter().any(|g| contains_phrase(&target, &words(g)));
    match (hit(&entry.positive_glosses), hit(&entry.negative_glosses)) {
        (true, false) => Prediction::Pos,
        (false, true) => Prediction::Neg,
        _ => Prediction::Unmatched,
    }
}

/// One contronym occurrence with its gold sense and the translation to judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordItem {
    pub gold: PolarityTag,
    pub target_text: String,
    pub entry: ContronymEntry,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub unmatched: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

pub fn f1_score<T: Scalar>(precision: T, recall: T) -> T {
    if precision + recall > T::zero() {
        T::of(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    }
}

/// Positive class is the POS sense. Unmatched predictions count against recall only.
pub fn prf_from_counts(counts: ConfusionCounts) -> WordScores {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    WordScores { precision, recall, f1: f1_score(precision, recall), counts }
}

pub fn word_polarity_prf(items: &[WordItem]) -> WordScores {
    let mut counts = ConfusionCounts::default();
    for item in items {
        let pred = predict_polarity(&item.target_text, &item.entry);
        if pred == Prediction::Unmatched {
            counts.unmatched += 1;
        }
        match (item.gold, pred) {
            (PolarityTag::Pos, Prediction::Pos) => counts.tp += 1,
            (PolarityTag::Neg, Prediction::Pos) => counts.fp += 1,
            (PolarityTag::Pos, _) => counts.fn_ += 1,
            (PolarityTag::Neg, Prediction::Neg) => counts.tn += 1,
            (PolarityTag::Neg, Prediction::Unmatched) => {}
        }
    }
    prf_from_counts(counts)
}

/// Mean of squared pairwise differences, summed in input order.
pub fn mean_squared_distance<T: Scalar>(targets: &[T], references: &[T]) -> Result<T, MetricError> {
    if targets.len() != references.len() {
        return Err(MetricError::LengthMismatch { hypotheses: targets.len(), references: references.len() });
    }
    if targets.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = T::zero();
    for (&t, &r) in targets.iter().zip(references) {
        let d = t - r;
        sum += d * d;
    }
    Ok(sum / T::of(targets.len() as f64))
}

/// Per-sentence scalars behind the cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceCost {
    pub target_scalar: f64,
    pub reference_scalar: f64,
    pub squared_distance: f64,
}

pub fn sentence_costs(targets: &[&str], references: &[&str], scorer: &dyn SentenceScorer, mode: ScalarMode) -> Result<Vec<SentenceCost>, MetricError> {
    if targets.len() != references.len() {
        return Err(MetricError::LengthMismatch { hypotheses: targets.len(), references: references.len() });
    }
    let ts = scorer.score_batch(targets)?;
    let rs = scorer.score_batch(references)?;
    Ok(ts
        .iter()
        .zip(&rs)
        .map(|(t, r)| {
            let (st, sr) = (polarity_scalar(t, mode), polarity_scalar(r, mode));
            SentenceCost { target_scalar: st, reference_scalar: sr, squared_distance: (st - sr) * (st - sr) }
        })
        .collect())
}

/// Mean squared distance between target and reference sentiment scalars.
pub fn sentiment_cost(targets: &[&str], references: &[&str], scorer: &dyn SentenceScorer, mode: ScalarMode) -> Result<f64, MetricError> {
    if targets.len() != references.len() {
        return Err(MetricError::LengthMismatch { hypotheses: targets.len(), references: references.len() });
    }
    if targets.is_empty() {
        return Err(MetricError::Empty);
    }
    let rows = sentence_costs(targets, references, scorer, mode)?;
    let t: Vec<f64> = rows.iter().map(|r| r.target_scalar).collect();
    let r: Vec<f64> = rows.iter().map(|r| r.reference_scalar).collect();
    mean_squared_distance(&t, &r)
}

/// Scalar mode used for each cost subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModes {
    pub positive: ScalarMode,
    pub negative: ScalarMode,
    pub overall: ScalarMode,
}

impl CostModes {
    /// Positive-class confidence on positive reviews, negative-class on negative
    /// reviews, signed on the whole corpus.
    pub fn per_subset() -> Self {
        Self { positive: ScalarMode::PositiveClass, negative: ScalarMode::NegativeClass, overall: ScalarMode::Signed }
    }

    pub fn uniform(mode: ScalarMode) -> Self {
        Self { positive: mode, negative: mode, overall: mode }
    }
}

impl Default for CostModes {
    fn default() -> Self {
        Self::per_subset()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub modes: CostModes,
    /// Rating bands that split the corpus into positive and negative subsets.
    pub bands: Thresholds,
    pub smoothing: Smoothing,
}

/// All three metrics over one corpus. Absent fields mean the metric had no input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub bleu: Option<f64>,
    pub word_precision: Option<f64>,
    pub word_recall: Option<f64>,
    pub word_f1: Option<f64>,
    pub counts: Option<ConfusionCounts>,
    pub cost_positive: Option<f64>,
    pub cost_negative: Option<f64>,
    pub cost_overall: Option<f64>,
    pub scalar_mode: CostModes,
}

impl EvalReport {
    pub fn empty(modes: CostModes) -> Self {
        Self {
            records: 0,
            bleu: None,
            word_precision: None,
            word_recall: None,
            word_f1: None,
            counts: None,
            cost_positive: None,
            cost_negative: None,
            cost_overall: None,
            scalar_mode: modes,
        }
    }

    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>, digits: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<22} {}", "records", self.records);
        let _ = writeln!(out, "{:<22} {}", "bleu", fmt(self.bleu, 2));
        let _ = writeln!(out, "{:<22} {}", "word precision", fmt(self.word_precision, 4));
        let _ = writeln!(out, "{:<22} {}", "word recall", fmt(self.word_recall, 4));
        let _ = writeln!(out, "{:<22} {}", "word f1", fmt(self.word_f1, 4));
        if let Some(c) = self.counts {
            let _ = writeln!(out, "{:<22} tp={} fp={} fn={} tn={} unmatched={}", "word counts", c.tp, c.fp, c.fn_, c.tn, c.unmatched);
        }
        let _ = writeln!(out, "{:<22} {} ({})", "cost positive", fmt(self.cost_positive, 4), self.scalar_mode.positive);
        let _ = writeln!(out, "{:<22} {} ({})", "cost negative", fmt(self.cost_negative, 4), self.scalar_mode.negative);
        let _ = writeln!(out, "{:<22} {} ({})", "cost overall", fmt(self.cost_overall, 4), self.scalar_mode.overall);
        out
    }
}

/// Word-level items from polarity-tagged contronyms in the (annotated) sources.
pub fn word_items(corpus: &Corpus, lexicon: &ContronymLexicon) -> Vec<WordItem> {
    let mut items = Vec::new();
    for r in corpus.records() {
        let Some(mt) = &r.mt_text else { continue };
        let tokens = prepare_source(&r.source_text);
        for occ in lexicon.find_contronyms(&tokens) {
            if let (Some(gold), Some(entry)) = (occ.tag, lexicon.entry(&occ.lemma)) {
                items.push(WordItem { gold, target_text: mt.clone(), entry: entry.clone() });
            }
        }
    }
    items
}

pub fn evaluate(corpus: &Corpus, lexicon: &ContronymLexicon, scorer: &dyn SentenceScorer, options: &EvalOptions) -> Result<EvalReport, MetricError> {
    let modes = options.modes;
    if corpus.is_empty() {
        return Ok(EvalReport::empty(modes));
    }
    let corpus = apply_annotations(corpus)?;
    let missing_mt: Vec<String> = corpus.records().iter().filter(|r| r.mt_text.is_none()).map(|r| r.id.clone()).collect();
    if !missing_mt.is_empty() {
        return Err(MetricError::MissingMt(missing_mt));
    }
    let missing_ref: Vec<String> = corpus.records().iter().filter(|r| r.reference_text.is_none()).map(|r| r.id.clone()).collect();
    if !missing_ref.is_empty() {
        return Err(MetricError::MissingReferences(missing_ref));
    }
    let pairs: Vec<(&str, &str, u8)> = corpus
        .records()
        .iter()
        .map(|r| (r.mt_text.as_deref().unwrap(), r.reference_text.as_deref().unwrap(), r.rating))
        .collect();
    let mts: Vec<&str> = pairs.iter().map(|p| p.0).collect();
    let refs: Vec<&str> = pairs.iter().map(|p| p.1).collect();
    let bleu = corpus_bleu_stats(&mts, &refs, options.smoothing)?.score;

    let items = word_items(&corpus, lexicon);
    let word = (!items.is_empty()).then(|| word_polarity_prf(&items));

    let subset_cost = |keep: &dyn Fn(u8) -> bool, mode: ScalarMode| -> Result<Option<f64>, MetricError> {
        let (t, r): (Vec<&str>, Vec<&str>) = pairs.iter().filter(|p| keep(p.2)).map(|p| (p.0, p.1)).unzip();
        if t.is_empty() {
            Ok(None)
        } else {
            sentiment_cost(&t, &r, scorer, mode).map(Some)
        }
    };
    let bands = options.bands;
    Ok(EvalReport {
        records: corpus.len(),
        bleu: Some(bleu),
        word_precision: word.map(|w| w.precision),
        word_recall: word.map(|w| w.recall),
        word_f1: word.map(|w| w.f1),
        counts: word.map(|w| w.counts),
        cost_positive: subset_cost(&|r| r >= bands.positive_min_rating, modes.positive)?,
        cost_negative: subset_cost(&|r| r <= bands.negative_max_rating, modes.negative)?,
        cost_overall: subset_cost(&|_| true, modes.overall)?,
        scalar_mode: modes,
    })
}

/// `id,target_scalar,reference_scalar,squared_distance` rows for every record.
pub fn costs_csv(corpus: &Corpus, scorer: &dyn SentenceScorer, mode: ScalarMode) -> Result<String, MetricError> {
    let corpus = apply_annotations(corpus)?;
    let mut ids = Vec::new();
    let mut t = Vec::new();
    let mut r = Vec::new();
    let mut missing = Vec::new();
    for rec in corpus.records() {
        match (&rec.mt_text, &rec.reference_text) {
            (Some(m), Some(f)) => {
                ids.push(rec.id.as_str());
                t.push(m.as_str());
                r.push(f.as_str());
            }
            _ => missing.push(rec.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(MetricError::MissingReferences(missing));
    }
    let rows = sentence_costs(&t, &r, scorer, mode)?;
    let mut out = String::from("id,target_scalar,reference_scalar,squared_distance\n");
    for (id, row) in ids.iter().zip(rows) {
        let _ = writeln!(out, "{},{},{},{}", csv_field(id), row.target_scalar, row.reference_scalar, row.squared_distance);
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
