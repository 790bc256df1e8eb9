//! Contronym, phrase, sentiment and word-list lexica, plus polarity tagging.
//!
//! A polarity tag is an ASCII suffix fused onto a contronym token
//! (`رهيبه__POS`, `رهيبه__NEG`). Every whitespace tokenizer downstream sees the
//! tagged forms as distinct vocabulary items, which is what gives a contronym
//! one embedding vector per sense.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{normalize_arabic, TokenSequence};

pub const POS_SUFFIX: &str = "__POS";
pub const NEG_SUFFIX: &str = "__NEG";

pub const CONTRONYMS_TSV: &str = include_str!("../data/contronyms.tsv");
pub const IDIOMS_TSV: &str = include_str!("../data/idioms.tsv");
pub const DIALECT_EXPRESSIONS_TSV: &str = include_str!("../data/dialect_expressions.tsv");
pub const DIACRITIC_AMBIGUOUS_TSV: &str = include_str!("../data/diacritic_ambiguous.tsv");
pub const VERB_STEMS_TSV: &str = include_str!("../data/verb_stems.tsv");
pub const SENTIMENT_EN_TSV: &str = include_str!("../data/sentiment_en.tsv");
pub const FUNCTION_WORDS_EN: &str = include_str!("../data/function_words_en.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("duplicate entry {0:?}")]
    Duplicate(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TagError {
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("token {index} is already tagged")]
    AlreadyTagged { index: usize },
    #[error("token {index} ({token:?}) is not a contronym surface form")]
    NotAContronym { index: usize, token: String },
}

/// Sense polarity of a tagged contronym.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolarityTag {
    #[serde(rename = "POS")]
    Pos,
    #[serde(rename = "NEG")]
    Neg,
}

impl PolarityTag {
    pub fn suffix(self) -> &'static str {
        match self {
            PolarityTag::Pos => POS_SUFFIX,
            PolarityTag::Neg => NEG_SUFFIX,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            PolarityTag::Pos => PolarityTag::Neg,
            PolarityTag::Neg => PolarityTag::Pos,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolarityTag::Pos => "POS",
            PolarityTag::Neg => "NEG",
        }
    }
}

impl fmt::Display for PolarityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolarityTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "POS" => Ok(PolarityTag::Pos),
            "NEG" => Ok(PolarityTag::Neg),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

/// Splits a token into its base form and polarity tag, if any.
pub fn split_tag(token: &str) -> (&str, Option<PolarityTag>) {
    if let Some(base) = token.strip_suffix(POS_SUFFIX).filter(|b| !b.is_empty()) {
        (base, Some(PolarityTag::Pos))
    } else if let Some(base) = token.strip_suffix(NEG_SUFFIX).filter(|b| !b.is_empty()) {
        (base, Some(PolarityTag::Neg))
    } else {
        (token, None)
    }
}

pub fn base_form(token: &str) -> &str {
    split_tag(token).0
}

/// Tags one token without consulting a lexicon.
pub fn tag_token(tokens: &TokenSequence, index: usize, polarity: PolarityTag) -> Result<TokenSequence, TagError> {
    let token = tokens.get(index).ok_or(TagError::IndexOutOfRange { index, len: tokens.len() })?;
    if split_tag(token).1.is_some() {
        return Err(TagError::AlreadyTagged { index });
    }
    let mut out = tokens.clone();
    out.tokens_mut()[index] = format!("{token}{}", polarity.suffix());
    Ok(out)
}

/// Sets the tag of one token, replacing any existing tag.
pub fn retag_token(tokens: &TokenSequence, index: usize, polarity: PolarityTag) -> Result<TokenSequence, TagError> {
    let token = tokens.get(index).ok_or(TagError::IndexOutOfRange { index, len: tokens.len() })?;
    let base = base_form(token).to_string();
    let mut out = tokens.clone();
    out.tokens_mut()[index] = format!("{base}{}", polarity.suffix());
    Ok(out)
}

/// Strips every tag suffix and reports where each one was.
pub fn untag(tokens: &TokenSequence) -> (TokenSequence, Vec<(usize, PolarityTag)>) {
    let mut tags = Vec::new();
    let mut out = tokens.clone();
    for (i, token) in out.tokens_mut().iter_mut().enumerate() {
        let (base, tag) = split_tag(token);
        if let Some(tag) = tag {
            tags.push((i, tag));
            *token = base.to_string();
        }
    }
    (out, tags)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContronymEntry {
    pub lemma: String,
    pub surface_forms: BTreeSet<String>,
    pub positive_glosses: BTreeSet<String>,
    pub negative_glosses: BTreeSet<String>,
    pub notes: String,
}

/// One contronym found in a token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContronymOccurrence {
    pub token_index: usize,
    pub lemma: String,
    pub tag: Option<PolarityTag>,
}

#[derive(Debug, Clone, Default)]
pub struct ContronymLexicon {
    entries: Vec<ContronymEntry>,
    by_surface: HashMap<String, usize>,
    by_lemma: HashMap<String, usize>,
}

fn gloss_set(field: &str) -> BTreeSet<String> {
    field
        .split('|')
        .map(|g| g.trim().to_lowercase())
        .filter(|g| !g.is_empty())
        .collect()
}

/// Non-comment, non-blank rows with their 1-based line numbers.
fn data_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

fn read_file(path: &Path) -> Result<String, LexiconError> {
    fs::read_to_string(path).map_err(|source| LexiconError::Io { path: path.to_path_buf(), source })
}

impl ContronymLexicon {
    pub fn new(entries: Vec<ContronymEntry>) -> Result<Self, LexiconError> {
        let mut lex = Self::default();
        for entry in entries {
            lex.insert(entry)?;
        }
        Ok(lex)
    }

    fn insert(&mut self, mut entry: ContronymEntry) -> Result<(), LexiconError> {
        entry.lemma = normalize_arabic(&entry.lemma);
        entry.surface_forms = entry.surface_forms.iter().map(|s| normalize_arabic(s)).collect();
        entry.surface_forms.insert(entry.lemma.clone());
        if self.by_lemma.contains_key(&entry.lemma) {
            return Err(LexiconError::Duplicate(entry.lemma));
        }
        if let Some(shared) = entry.positive_glosses.intersection(&entry.negative_glosses).next() {
            return Err(LexiconError::Malformed {
                row: self.entries.len() + 1,
                reason: format!("gloss {shared:?} is both positive and negative for {}", entry.lemma),
            });
        }
        let idx = self.entries.len();
        for surface in &entry.surface_forms {
            if self.by_surface.insert(surface.clone(), idx).is_some() {
                return Err(LexiconError::Duplicate(surface.clone()));
            }
        }
        self.by_lemma.insert(entry.lemma.clone(), idx);
        self.entries.push(entry);
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::default();
        for (row, cols) in data_rows(text) {
            if cols.len() < 4 {
                return Err(LexiconError::Malformed { row, reason: format!("expected at least 4 columns, found {}", cols.len()) });
            }
            let lemma = cols[0].trim();
            if lemma.is_empty() {
                return Err(LexiconError::Malformed { row, reason: "empty lemma".into() });
            }
            let surface_forms = cols[1].split('|').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            let entry = ContronymEntry {
                lemma: lemma.to_string(),
                surface_forms,
                positive_glosses: gloss_set(cols[2]),
                negative_glosses: gloss_set(cols[3]),
                notes: cols.get(4).map(|s| s.trim().to_string()).unwrap_or_default(),
            };
            if entry.positive_glosses.is_empty() || entry.negative_glosses.is_empty() {
                return Err(LexiconError::Malformed { row, reason: "both gloss sets must be non-empty".into() });
            }
            lex.insert(entry).map_err(|e| match e {
                LexiconError::Malformed { reason, .. } => LexiconError::Malformed { row, reason },
                other => other,
            })?;
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&read_file(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(CONTRONYMS_TSV).expect("shipped contronym lexicon is valid")
    }

    pub fn entries(&self) -> &[ContronymEntry] {
        &self.entries
    }

    pub fn entry(&self, lemma: &str) -> Option<&ContronymEntry> {
        self.by_lemma.get(lemma).map(|&i| &self.entries[i])
    }

    /// Entry for a (possibly tagged) surface token.
    pub fn lookup(&self, token: &str) -> Option<&ContronymEntry> {
        self.by_surface.get(base_form(token)).map(|&i| &self.entries[i])
    }

    pub fn find_contronyms(&self, tokens: &[String]) -> Vec<ContronymOccurrence> {
        tokens
            .iter()
            .enumerate()
            .filter_map(|(i, token)| {
                let (base, tag) = split_tag(token);
                self.by_surface.get(base).map(|&e| ContronymOccurrence {
                    token_index: i,
                    lemma: self.entries[e].lemma.clone(),
                    tag,
                })
            })
            .collect()
    }

    /// Tags an untagged contronym surface form.
    pub fn tag(&self, tokens: &TokenSequence, index: usize, polarity: PolarityTag) -> Result<TokenSequence, TagError> {
        let token = tokens.get(index).ok_or(TagError::IndexOutOfRange { index, len: tokens.len() })?;
        if split_tag(token).1.is_some() {
            return Err(TagError::AlreadyTagged { index });
        }
        if !self.by_surface.contains_key(token.as_str()) {
            return Err(TagError::NotAContronym { index, token: token.clone() });
        }
        tag_token(tokens, index, polarity)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# lemma\tsurface_forms\tpositive_glosses\tnegative_glosses\tnotes\n");
        for e in &self.entries {
            let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join("|");
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.lemma,
                join(&e.surface_forms),
                join(&e.positive_glosses),
                join(&e.negative_glosses),
                e.notes
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhraseKind {
    Idiom,
    DialectExpression,
    DiacriticAmbiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhrasePolarity {
    #[serde(rename = "POS")]
    Pos,
    #[serde(rename = "NEG")]
    Neg,
    #[serde(rename = "NEUTRAL")]
    Neutral,
}

impl FromStr for PhrasePolarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "POS" => Ok(PhrasePolarity::Pos),
            "NEG" => Ok(PhrasePolarity::Neg),
            "NEUTRAL" => Ok(PhrasePolarity::Neutral),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseEntry {
    pub pattern: Vec<String>,
    pub kind: PhraseKind,
    pub gloss: String,
    pub polarity: PhrasePolarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhraseMatch<'a> {
    pub start: usize,
    pub length: usize,
    pub entry: &'a PhraseEntry,
}

#[derive(Debug, Clone)]
pub struct PhraseLexicon {
    kind: PhraseKind,
    entries: Vec<PhraseEntry>,
    /// First token -> entry indices, longest pattern first.
    by_first: HashMap<String, Vec<usize>>,
}

impl PhraseLexicon {
    pub fn new(kind: PhraseKind, entries: Vec<PhraseEntry>) -> Result<Self, LexiconError> {
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(entries.len());
        for (i, mut e) in entries.into_iter().enumerate() {
            e.pattern = e.pattern.iter().flat_map(|t| normalize_arabic(t).split(' ').map(String::from).collect::<Vec<_>>()).filter(|t| !t.is_empty()).collect();
            if e.pattern.is_empty() {
                return Err(LexiconError::Malformed { row: i + 1, reason: "empty pattern".into() });
            }
            e.kind = kind;
            if !seen.insert(e.pattern.clone()) {
                return Err(LexiconError::Duplicate(e.pattern.join(" ")));
            }
            normalized.push(e);
        }
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in normalized.iter().enumerate() {
            by_first.entry(e.pattern[0].clone()).or_default().push(i);
        }
        for list in by_first.values_mut() {
            list.sort_by_key(|&i| (std::cmp::Reverse(normalized[i].pattern.len()), i));
        }
        Ok(Self { kind, entries: normalized, by_first })
    }

    pub fn parse(text: &str, kind: PhraseKind) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (row, cols) in data_rows(text) {
            if cols.len() < 3 {
                return Err(LexiconError::Malformed { row, reason: format!("expected at least 3 columns, found {}", cols.len()) });
            }
            let pattern: Vec<String> = normalize_arabic(cols[0]).split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
            if pattern.is_empty() {
                return Err(LexiconError::Malformed { row, reason: "empty pattern".into() });
            }
            if !seen.insert(pattern.clone()) {
                return Err(LexiconError::Duplicate(pattern.join(" ")));
            }
            let polarity = cols[2].parse().map_err(|reason| LexiconError::Malformed { row, reason })?;
            entries.push(PhraseEntry { pattern, kind, gloss: cols[1].trim().to_string(), polarity });
        }
        Self::new(kind, entries)
    }

    pub fn load(path: &Path, kind: PhraseKind) -> Result<Self, LexiconError> {
        Self::parse(&read_file(path)?, kind)
    }

    pub fn kind(&self) -> PhraseKind {
        self.kind
    }

    pub fn entries(&self) -> &[PhraseEntry] {
        &self.entries
    }

    /// Longest-match-first, non-overlapping matches, scanning left to right.
    /// Tokens are compared by base form, so tagged tokens still match.
    pub fn match_phrases(&self, tokens: &[String]) -> Vec<PhraseMatch<'_>> {
        let mut matches = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.by_first.get(base_form(&tokens[i])).and_then(|candidates| {
                candidates.iter().map(|&e| &self.entries[e]).find(|e| {
                    e.pattern.len() <= tokens.len() - i
                        && e.pattern.iter().zip(&tokens[i..]).all(|(p, t)| p == base_form(t))
                })
            });
            match hit {
                Some(entry) => {
                    matches.push(PhraseMatch { start: i, length: entry.pattern.len(), entry });
                    i += entry.pattern.len();
                }
                None => i += 1,
            }
        }
        matches
    }
}

/// English token -> weight in {-1, +1}.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    entries: HashMap<String, i8>,
}

impl SentimentLexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, i8)>,
        S: Into<String>,
    {
        let mut map = HashMap::new();
        for (i, (token, weight)) in entries.into_iter().enumerate() {
            let token = token.into().to_lowercase();
            if weight != 1 && weight != -1 {
                return Err(LexiconError::Malformed { row: i + 1, reason: format!("weight of {token:?} must be +1 or -1") });
            }
            if map.insert(token.clone(), weight).is_some() {
                return Err(LexiconError::Duplicate(token));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut map = HashMap::new();
        for (row, cols) in data_rows(text) {
            if cols.len() < 2 {
                return Err(LexiconError::Malformed { row, reason: "expected token and weight".into() });
            }
            let token = cols[0].trim().to_lowercase();
            let weight = match cols[1].trim() {
                "+1" | "1" => 1,
                "-1" => -1,
                other => return Err(LexiconError::Malformed { row, reason: format!("weight must be +1 or -1, got {other:?}") }),
            };
            if token.is_empty() {
                return Err(LexiconError::Malformed { row, reason: "empty token".into() });
            }
            if map.insert(token.clone(), weight).is_some() {
                return Err(LexiconError::Duplicate(token));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&read_file(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(SENTIMENT_EN_TSV).expect("shipped sentiment lexicon is valid")
    }

    pub fn weight(&self, token: &str) -> Option<i8> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A plain set of words: verb stems or function words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    words: BTreeSet<String>,
}

impl WordList {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Self { words: words.into_iter().map(Into::into).collect() }
    }

    /// First column of each row; `normalize` applies Arabic normalization, otherwise lowercases.
    pub fn parse(text: &str, normalize: bool) -> Result<Self, LexiconError> {
        let mut words = BTreeSet::new();
        for (row, cols) in data_rows(text) {
            let raw = cols[0].trim();
            let word = if normalize { normalize_arabic(raw) } else { raw.to_lowercase() };
            if word.is_empty() {
                return Err(LexiconError::Malformed { row, reason: "empty word".into() });
            }
            if !words.insert(word.clone()) {
                return Err(LexiconError::Duplicate(word));
            }
        }
        Ok(Self { words })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconKind {
    Contronym,
    Idiom,
    DialectExpression,
    DiacriticAmbiguous,
    Sentiment,
    VerbStem,
    FunctionWord,
}

impl LexiconKind {
    pub const ALL: [LexiconKind; 7] = [
        LexiconKind::Contronym,
        LexiconKind::Idiom,
        LexiconKind::DialectExpression,
        LexiconKind::DiacriticAmbiguous,
        LexiconKind::Sentiment,
        LexiconKind::VerbStem,
        LexiconKind::FunctionWord,
    ];

    /// File name used inside a lexicon directory.
    pub fn file_name(self) -> &'static str {
        match self {
            LexiconKind::Contronym => "contronyms.tsv",
            LexiconKind::Idiom => "idioms.tsv",
            LexiconKind::DialectExpression => "dialect_expressions.tsv",
            LexiconKind::DiacriticAmbiguous => "diacritic_ambiguous.tsv",
            LexiconKind::Sentiment => "sentiment_en.tsv",
            LexiconKind::VerbStem => "verb_stems.tsv",
            LexiconKind::FunctionWord => "function_words_en.txt",
        }
    }

    fn builtin_text(self) -> &'static str {
        match self {
            LexiconKind::Contronym => CONTRONYMS_TSV,
            LexiconKind::Idiom => IDIOMS_TSV,
            LexiconKind::DialectExpression => DIALECT_EXPRESSIONS_TSV,
            LexiconKind::DiacriticAmbiguous => DIACRITIC_AMBIGUOUS_TSV,
            LexiconKind::Sentiment => SENTIMENT_EN_TSV,
            LexiconKind::VerbStem => VERB_STEMS_TSV,
            LexiconKind::FunctionWord => FUNCTION_WORDS_EN,
        }
    }
}

impl FromStr for LexiconKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(|v| v == s)).unwrap_or(false))
            .ok_or_else(|| format!("unknown lexicon kind {s:?}"))
    }
}

#[derive(Debug, Clone)]
pub enum Lexicon {
    Contronym(ContronymLexicon),
    Phrase(PhraseLexicon),
    Sentiment(SentimentLexicon),
    Words(WordList),
}

pub fn parse_lexicon(text: &str, kind: LexiconKind) -> Result<Lexicon, LexiconError> {
    Ok(match kind {
        LexiconKind::Contronym => Lexicon::Contronym(ContronymLexicon::parse(text)?),
        LexiconKind::Idiom => Lexicon::Phrase(PhraseLexicon::parse(text, PhraseKind::Idiom)?),
        LexiconKind::DialectExpression => Lexicon::Phrase(PhraseLexicon::parse(text, PhraseKind::DialectExpression)?),
        LexiconKind::DiacriticAmbiguous => Lexicon::Phrase(PhraseLexicon::parse(text, PhraseKind::DiacriticAmbiguous)?),
        LexiconKind::Sentiment => Lexicon::Sentiment(SentimentLexicon::parse(text)?),
        LexiconKind::VerbStem => Lexicon::Words(WordList::parse(text, true)?),
        LexiconKind::FunctionWord => Lexicon::Words(WordList::parse(text, false)?),
    })
}

pub fn load_lexicon(path: &Path, kind: LexiconKind) -> Result<Lexicon, LexiconError> {
    parse_lexicon(&read_file(path)?, kind)
}

/// Every lexicon the pipeline consults.
#[derive(Debug, Clone)]
pub struct Lexica {
    pub contronyms: ContronymLexicon,
    pub idioms: PhraseLexicon,
    pub dialect_expressions: PhraseLexicon,
    pub diacritic_ambiguous: PhraseLexicon,
    pub sentiment: SentimentLexicon,
    pub verb_stems: WordList,
    pub function_words: WordList,
}

impl Lexica {
    /// The seed lexica shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_source(|kind| Ok(kind.builtin_text().to_string())).expect("shipped lexica are valid")
    }

    /// Loads each lexicon from `dir` when its file exists there, falling back to the seed otherwise.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        Self::from_source(|kind| {
            let path = dir.join(kind.file_name());
            if path.exists() {
                read_file(&path)
            } else {
                Ok(kind.builtin_text().to_string())
            }
        })
    }

    fn from_source(mut text: impl FnMut(LexiconKind) -> Result<String, LexiconError>) -> Result<Self, LexiconError> {
        let mut get = |kind| -> Result<Lexicon, LexiconError> { parse_lexicon(&text(kind)?, kind) };
        let (Lexicon::Contronym(contronyms), Lexicon::Phrase(idioms), Lexicon::Phrase(dialect_expressions), Lexicon::Phrase(diacritic_ambiguous), Lexicon::Sentiment(sentiment), Lexicon::Words(verb_stems), Lexicon::Words(function_words)) = (
            get(LexiconKind::Contronym)?,
            get(LexiconKind::Idiom)?,
            get(LexiconKind::DialectExpression)?,
            get(LexiconKind::DiacriticAmbiguous)?,
            get(LexiconKind::Sentiment)?,
            get(LexiconKind::VerbStem)?,
            get(LexiconKind::FunctionWord)?,
        ) else {
            unreachable!("parse_lexicon returns the variant matching its kind")
        };
        Ok(Self { contronyms, idioms, dialect_expressions, diacritic_ambiguous, sentiment, verb_stems, function_words })
    }
}
