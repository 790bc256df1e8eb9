//! Arabic orthographic normalization, tokenization and segment splitting.
//!
//! The letter-form mapping and the set of stripped marks live in
//! `data/normalization.tsv` so the table can be swapped or pinned without
//! touching code.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Deref;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw contents of the shipped normalization table.
pub const NORMALIZATION_TABLE_TSV: &str = include_str!("../data/normalization.tsv");

/// Punctuation split off into standalone tokens.
pub const PUNCTUATION: &[char] = &['.', ',', '!', '?', ':', '(', ')', '"', '\'', '\u{061B}', '\u{060C}', '\u{061F}'];

pub const TATWEEL: char = '\u{0640}';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("normalization table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("invalid token {token:?}: {reason}")]
    InvalidToken { token: String, reason: &'static str },
}

/// Parsed form of the normalization table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationTable {
    pub version: u32,
    pub mapping: HashMap<char, char>,
    pub stripped: HashSet<char>,
}

impl NormalizationTable {
    pub fn parse(text: &str) -> Result<Self, NormalizeError> {
        let mut version = None;
        let mut mapping = HashMap::new();
        let mut stripped = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| NormalizeError::Table { line: line_no, reason };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols[0] {
                "version" => {
                    let v = cols.get(1).ok_or_else(|| err("missing version".into()))?;
                    version = Some(v.trim().parse().map_err(|_| err(format!("bad version {v:?}")))?);
                }
                "map" => {
                    if cols.len() < 3 {
                        return Err(err("map needs from and to columns".into()));
                    }
                    let from = parse_code_point(cols[1]).map_err(err)?;
                    let to = parse_code_point(cols[2]).map_err(err)?;
                    if mapping.insert(from, to).is_some() {
                        return Err(err(format!("duplicate mapping for U+{:04X}", from as u32)));
                    }
                }
                "strip" => {
                    let spec = cols.get(1).ok_or_else(|| err("strip needs a code point".into()))?;
                    let (lo, hi) = match spec.split_once('-') {
                        Some((a, b)) => (parse_code_point(a).map_err(err)?, parse_code_point(b).map_err(err)?),
                        None => {
                            let c = parse_code_point(spec).map_err(err)?;
                            (c, c)
                        }
                    };
                    if lo > hi {
                        return Err(err(format!("empty range {spec}")));
                    }
                    stripped.extend(lo..=hi);
                }
                other => return Err(err(format!("unknown action {other:?}"))),
            }
        }
        let version = version.ok_or(NormalizeError::Table { line: 0, reason: "missing version line".into() })?;
        // A mapped target that is itself mapped or stripped would break idempotence.
        for (&from, &to) in &mapping {
            if mapping.contains_key(&to) || stripped.contains(&to) {
                return Err(NormalizeError::Table {
                    line: 0,
                    reason: format!("U+{:04X} maps to a non-fixed point U+{:04X}", from as u32, to as u32),
                });
            }
        }
        Ok(Self { version, mapping, stripped })
    }

    /// The table shipped with the crate.
    pub fn builtin() -> &'static NormalizationTable {
        static TABLE: LazyLock<NormalizationTable> = LazyLock::new(|| {
            NormalizationTable::parse(NORMALIZATION_TABLE_TSV).expect("shipped normalization table is valid")
        });
        &TABLE
    }

    pub fn normalize(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut pending_space = false;
        for c in text.chars() {
            if c.is_whitespace() {
                pending_space = !out.is_empty();
                continue;
            }
            if self.stripped.contains(&c) {
                continue;
            }
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(*self.mapping.get(&c).unwrap_or(&c));
        }
        out
    }
}

fn parse_code_point(s: &str) -> Result<char, String> {
    let hex = s.trim().strip_prefix("U+").ok_or_else(|| format!("expected U+XXXX, got {s:?}"))?;
    let value = u32::from_str_radix(hex, 16).map_err(|_| format!("bad hex in {s:?}"))?;
    char::from_u32(value).ok_or_else(|| format!("{s} is not a scalar value"))
}

/// Maps letter variants, drops tatweel and diacritics, collapses whitespace and trims.
pub fn normalize_arabic(text: &str) -> String {
    NormalizationTable::builtin().normalize(text)
}

/// Arabic letters proper (hamza through yeh), excluding marks and tatweel.
pub fn is_arabic_letter(c: char) -> bool {
    matches!(c, '\u{0621}'..='\u{063A}' | '\u{0641}'..='\u{064A}' | '\u{0671}'..='\u{06D3}')
}

/// Reduces every run of three or more identical Arabic letters to a single letter.
pub fn strip_elongation(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i + 1;
        while j < chars.len() && chars[j] == c {
            j += 1;
        }
        let run = j - i;
        if run >= 3 && is_arabic_letter(c) {
            out.push(c);
        } else {
            out.extend(&chars[i..j]);
        }
        i = j;
    }
    out
}

pub fn is_punctuation(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// True for a token made of a single punctuation character.
pub fn is_punctuation_token(token: &str) -> bool {
    let mut chars = token.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if is_punctuation(c))
}

/// An ordered list of non-empty tokens without internal whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self, NormalizeError> {
        for t in &tokens {
            if t.is_empty() {
                return Err(NormalizeError::InvalidToken { token: t.clone(), reason: "empty token" });
            }
            if t.chars().any(char::is_whitespace) {
                return Err(NormalizeError::InvalidToken { token: t.clone(), reason: "token contains whitespace" });
            }
        }
        Ok(Self(tokens))
    }

    /// Builds a sequence from string slices, panicking on invalid tokens. Intended for literals.
    pub fn from_strs(tokens: &[&str]) -> Self {
        Self::new(tokens.iter().map(|s| s.to_string()).collect()).expect("valid literal tokens")
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Joins with single spaces; `tokenize` of the result gives the sequence back
    /// for any sequence that `tokenize` produced.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut [String] {
        &mut self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for TokenSequence {
    type Error = NormalizeError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(tokens)
    }
}

impl From<TokenSequence> for Vec<String> {
    fn from(seq: TokenSequence) -> Self {
        seq.0
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Splits on whitespace and breaks punctuation out into separate tokens.
/// Polarity tag suffixes contain no punctuation, so tagged tokens stay whole.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    TokenSequence(tokens)
}

/// Cuts a sequence into consecutive segments of `max_len` tokens; only the last may be shorter.
pub fn split_segments(tokens: &TokenSequence, max_len: usize) -> Vec<TokenSequence> {
    assert!(max_len >= 1, "max_len must be positive");
    tokens.0.chunks(max_len).map(|c| TokenSequence(c.to_vec())).collect()
}

/// Normalization applied to source text ahead of tokenization.
pub fn prepare_source(text: &str) -> TokenSequence {
    tokenize(&strip_elongation(&normalize_arabic(text)))
}

/// Normalizes a single raw token, keeping positions aligned with `tokenize(text)`.
pub fn normalize_token(token: &str) -> String {
    strip_elongation(&normalize_arabic(token))
}
