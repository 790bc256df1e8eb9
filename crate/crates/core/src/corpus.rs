//! Review corpora, annotation logs and their on-disk JSONL/TSV forms.
//!
//! A corpus at `reviews.jsonl` keeps its annotations in the sibling file
//! `reviews.ann.jsonl`, one `AnnotationRecord` per line.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicons::{retag_token, PolarityTag};
use crate::normalize::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("duplicate segment {segment_index} of review {origin_id:?}")]
    DuplicateSegment { origin_id: String, segment_index: u32 },
    #[error("record {id:?}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("annotation for {item_id:?}: {}", format_field_errors(.errors))]
    InvalidAnnotation { item_id: String, errors: Vec<FieldError> },
    #[error("annotation refers to unknown item {0:?}")]
    UnknownItem(String),
    #[error("item {item_id:?}: token index {index} out of bounds ({len} tokens)")]
    TokenIndexOutOfBounds { item_id: String, index: usize, len: usize },
}

impl CorpusError {
    pub fn is_io(&self) -> bool {
        matches!(self, CorpusError::Io { .. })
    }
}

fn format_field_errors(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; ")
}

/// One user-generated review sentence with its rating and translations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub id: String,
    pub source_text: String,
    pub rating: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mt_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_text: Option<String>,
    pub segment_index: u32,
    pub origin_id: String,
}

impl ReviewRecord {
    /// An unsplit review: its own origin, segment 0.
    pub fn new(id: impl Into<String>, source_text: impl Into<String>, rating: u8) -> Self {
        let id = id.into();
        Self {
            origin_id: id.clone(),
            id,
            source_text: source_text.into(),
            rating,
            mt_text: None,
            reference_text: None,
            segment_index: 0,
        }
    }

    pub fn with_mt(mut self, mt: impl Into<String>) -> Self {
        self.mt_text = Some(mt.into());
        self
    }

    pub fn with_reference(mut self, reference: impl Into<String>) -> Self {
        self.reference_text = Some(reference.into());
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if !(1..=5).contains(&self.rating) {
            return Err(format!("rating out of range: {}", self.rating));
        }
        if self.source_text.trim().is_empty() {
            return Err("empty source_text".into());
        }
        if self.origin_id.is_empty() {
            return Err("empty origin_id".into());
        }
        Ok(())
    }
}

/// Wire form that accepts out-of-range ratings so they can be reported with a line number.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    source_text: String,
    rating: i64,
    #[serde(default)]
    mt_text: Option<String>,
    #[serde(default)]
    reference_text: Option<String>,
    #[serde(default)]
    segment_index: Option<u32>,
    #[serde(default)]
    origin_id: Option<String>,
}

impl RawRecord {
    fn into_record(self) -> Result<ReviewRecord, String> {
        let rating = u8::try_from(self.rating)
            .ok()
            .filter(|r| (1..=5).contains(r))
            .ok_or_else(|| format!("rating out of range: {}", self.rating))?;
        let record = ReviewRecord {
            origin_id: self.origin_id.unwrap_or_else(|| self.id.clone()),
            id: self.id,
            source_text: self.source_text,
            rating,
            mt_text: self.mt_text,
            reference_text: self.reference_text,
            segment_index: self.segment_index.unwrap_or(0),
        };
        record.validate()?;
        Ok(record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    PolarityTag,
    PostEdit,
}

/// A field-level validation failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

/// A human decision on one item: a contronym polarity tag or a post-edited reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub kind: AnnotationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<PolarityTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_target: Option<String>,
    pub annotator: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
}

impl AnnotationRecord {
    pub fn polarity_tag(item_id: impl Into<String>, token_index: usize, polarity: PolarityTag, annotator: impl Into<String>, timestamp: i64) -> Self {
        Self {
            item_id: item_id.into(),
            kind: AnnotationKind::PolarityTag,
            token_index: Some(token_index),
            polarity: Some(polarity),
            edited_target: None,
            annotator: annotator.into(),
            timestamp,
        }
    }

    pub fn post_edit(item_id: impl Into<String>, edited_target: impl Into<String>, annotator: impl Into<String>, timestamp: i64) -> Self {
        Self {
            item_id: item_id.into(),
            kind: AnnotationKind::PostEdit,
            token_index: None,
            polarity: None,
            edited_target: Some(edited_target.into()),
            annotator: annotator.into(),
            timestamp,
        }
    }

    /// Checks the kind-conditional fields, leaving the timestamp aside.
    pub fn validate_body(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if self.item_id.is_empty() {
            errors.push(FieldError::new("item_id", "must not be empty"));
        }
        match self.kind {
            AnnotationKind::PolarityTag => {
                if self.token_index.is_none() {
                    errors.push(FieldError::new("token_index", "required for polarity_tag"));
                }
                if self.polarity.is_none() {
                    errors.push(FieldError::new("polarity", "required for polarity_tag"));
                }
                if self.edited_target.is_some() {
                    errors.push(FieldError::new("edited_target", "not allowed for polarity_tag"));
                }
            }
            AnnotationKind::PostEdit => {
                match &self.edited_target {
                    None => errors.push(FieldError::new("edited_target", "required for post_edit")),
                    Some(t) if t.trim().is_empty() => errors.push(FieldError::new("edited_target", "must not be empty")),
                    Some(_) => {}
                }
                if self.token_index.is_some() {
                    errors.push(FieldError::new("token_index", "not allowed for post_edit"));
                }
                if self.polarity.is_some() {
                    errors.push(FieldError::new("polarity", "not allowed for post_edit"));
                }
            }
        }
        errors
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = self.validate_body();
        if self.timestamp <= 0 {
            errors.push(FieldError::new("timestamp", "must be strictly positive"));
        }
        errors
    }
}

/// Records and annotations; every annotation refers to a record.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<ReviewRecord>,
    annotations: Vec<AnnotationRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(records: Vec<ReviewRecord>, annotations: Vec<AnnotationRecord>) -> Result<Self, CorpusError> {
        let mut corpus = Self::with_records(records)?;
        for a in annotations {
            corpus.check_annotation(&a)?;
            corpus.annotations.push(a);
        }
        Ok(corpus)
    }

    fn with_records(records: Vec<ReviewRecord>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(records.len());
        let mut segments = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|reason| CorpusError::InvalidRecord { id: r.id.clone(), reason })?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
            if !segments.insert((r.origin_id.as_str(), r.segment_index)) {
                return Err(CorpusError::DuplicateSegment { origin_id: r.origin_id.clone(), segment_index: r.segment_index });
            }
        }
        Ok(Self { records, annotations: Vec::new(), index })
    }

    fn check_annotation(&self, a: &AnnotationRecord) -> Result<(), CorpusError> {
        let errors = a.validate();
        if !errors.is_empty() {
            return Err(CorpusError::InvalidAnnotation { item_id: a.item_id.clone(), errors });
        }
        if !self.index.contains_key(&a.item_id) {
            return Err(CorpusError::UnknownItem(a.item_id.clone()));
        }
        Ok(())
    }

    pub fn records(&self) -> &[ReviewRecord] {
        &self.records
    }

    pub fn annotations(&self) -> &[AnnotationRecord] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ReviewRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn annotations_for<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a AnnotationRecord> + 'a {
        self.annotations.iter().filter(move |a| a.item_id == id)
    }

    /// A new corpus with one more annotation.
    pub fn with_annotation(&self, annotation: AnnotationRecord) -> Result<Self, CorpusError> {
        self.check_annotation(&annotation)?;
        let mut next = self.clone();
        next.annotations.push(annotation);
        Ok(next)
    }

    /// A new corpus with the same annotations over replaced records.
    pub fn with_records_replaced(&self, records: Vec<ReviewRecord>) -> Result<Self, CorpusError> {
        Self::new(records, self.annotations.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

/// `dir/name.jsonl` -> `dir/name.ann.jsonl`.
pub fn annotation_path(corpus_path: &Path) -> PathBuf {
    let stem = corpus_path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
    corpus_path.with_file_name(format!("{stem}.ann.jsonl"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Parse { path: path.to_path_buf(), line, reason: reason.into() }
}

/// Loads a corpus and its sibling annotation file, if present.
pub fn load_reviews(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let records = match format {
        CorpusFormat::Jsonl => parse_jsonl_records(path, &text)?,
        CorpusFormat::Tsv => parse_tsv_records(path, &text)?,
    };
    let ann_path = annotation_path(path);
    let annotations = if ann_path.exists() { load_annotations(&ann_path)? } else { Vec::new() };
    let mut corpus = Corpus::with_records(records)?;
    for (i, a) in annotations.into_iter().enumerate() {
        corpus.check_annotation(&a).map_err(|e| parse_err(&ann_path, i + 1, e.to_string()))?;
        corpus.annotations.push(a);
    }
    Ok(corpus)
}

fn check_duplicates(records: &[ReviewRecord]) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(CorpusError::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

fn parse_jsonl_records(path: &Path, text: &str) -> Result<Vec<ReviewRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        let record = raw.into_record().map_err(|reason| parse_err(path, i + 1, reason))?;
        out.push(record);
    }
    check_duplicates(&out)?;
    Ok(out)
}

/// Columns: id, rating, source, mt, reference. The first line is a header.
fn parse_tsv_records(path: &Path, text: &str) -> Result<Vec<ReviewRecord>, CorpusError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((i, header)) => {
            let first = header.split('\t').next().unwrap_or("").trim().to_ascii_lowercase();
            if first != "id" {
                return Err(parse_err(path, i + 1, "missing header row (expected columns id, rating, source, mt, reference)"));
            }
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if cols.len() < 3 || cols.len() > 5 {
            return Err(parse_err(path, i + 1, format!("expected 3 to 5 columns, found {}", cols.len())));
        }
        let rating: i64 = cols[1].trim().parse().map_err(|_| parse_err(path, i + 1, format!("rating is not an integer: {:?}", cols[1])))?;
        let optional = |idx: usize| cols.get(idx).map(|s| s.trim()).filter(|s| !s.is_empty()).map(String::from);
        let raw = RawRecord {
            id: cols[0].trim().to_string(),
            source_text: cols[2].to_string(),
            rating,
            mt_text: optional(3),
            reference_text: optional(4),
            segment_index: None,
            origin_id: None,
        };
        out.push(raw.into_record().map_err(|reason| parse_err(path, i + 1, reason))?);
    }
    check_duplicates(&out)?;
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let a: AnnotationRecord = serde_json::from_str(line).map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        let errors = a.validate();
        if !errors.is_empty() {
            return Err(parse_err(path, i + 1, format_field_errors(&errors)));
        }
        out.push(a);
    }
    Ok(out)
}

/// Writes any serializable items as JSONL.
pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(&item).expect("corpus types serialize");
        w.write_all(line.as_bytes()).map_err(io_err(path))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes records to `path` and annotations to the sibling `.ann.jsonl` file.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    write_jsonl(path, corpus.records())?;
    write_jsonl(&annotation_path(path), corpus.annotations())
}

/// Appends one annotation line to a log file, creating it if needed.
pub fn append_annotation(path: &Path, annotation: &AnnotationRecord) -> Result<(), CorpusError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    let mut line = serde_json::to_string(annotation).expect("annotation serializes");
    line.push('\n');
    file.write_all(line.as_bytes()).map_err(io_err(path))?;
    file.sync_data().map_err(io_err(path))
}

/// Latest annotation by timestamp; ties go to the one later in the log.
fn latest<'a>(items: impl Iterator<Item = &'a AnnotationRecord>) -> Option<&'a AnnotationRecord> {
    items.fold(None, |best: Option<&AnnotationRecord>, a| match best {
        Some(b) if b.timestamp > a.timestamp => Some(b),
        _ => Some(a),
    })
}

/// Folds annotations into the records: the latest post-edit becomes the
/// reference, and polarity tags are fused onto the tagged source tokens.
pub fn apply_annotations(corpus: &Corpus) -> Result<Corpus, CorpusError> {
    let mut records = corpus.records.clone();
    for record in &mut records {
        let anns: Vec<&AnnotationRecord> = corpus.annotations_for(&record.id).collect();
        if anns.is_empty() {
            continue;
        }
        if let Some(edit) = latest(anns.iter().copied().filter(|a| a.kind == AnnotationKind::PostEdit)) {
            record.reference_text = edit.edited_target.clone();
        }
        let mut by_index: Vec<(usize, Vec<&AnnotationRecord>)> = Vec::new();
        for a in anns.iter().copied().filter(|a| a.kind == AnnotationKind::PolarityTag) {
            let idx = a.token_index.expect("validated polarity_tag has token_index");
            match by_index.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, list)) => list.push(a),
                None => by_index.push((idx, vec![a])),
            }
        }
        if by_index.is_empty() {
            continue;
        }
        let mut tokens = tokenize(&record.source_text);
        for (idx, list) in by_index {
            let winner = latest(list.into_iter()).expect("non-empty group");
            let polarity = winner.polarity.expect("validated polarity_tag has polarity");
            tokens = retag_token(&tokens, idx, polarity).map_err(|_| CorpusError::TokenIndexOutOfBounds {
                item_id: record.id.clone(),
                index: idx,
                len: tokens.len(),
            })?;
        }
        record.source_text = tokens.join();
    }
    Ok(Corpus { records, annotations: corpus.annotations.clone(), index: corpus.index.clone() })
}
