//! API documentation records and sentence normalisation.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in" => Some(Direction::In),
            "out" => Some(Direction::Out),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxParam {
    pub name: String,
    pub direction: Direction,
}

impl SyntaxParam {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            direction,
        }
    }
}

/// One documentation page: title fields, description, syntax block and the
/// remaining free text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ApiDocRecord {
    pub api_name: String,
    pub header: String,
    pub class_name: String,
    pub description: String,
    pub syntax_params: Vec<SyntaxParam>,
    pub other_text: String,
}

impl ApiDocRecord {
    /// Trims every field and checks the record-level invariants.
    pub fn normalized(mut self) -> Result<Self> {
        self.api_name = self.api_name.trim().to_string();
        self.header = self.header.trim().to_string();
        self.class_name = self.class_name.trim().to_string();
        self.description = self.description.trim().to_string();
        self.other_text = self.other_text.trim().to_string();
        for p in &mut self.syntax_params {
            p.name = p.name.trim().to_string();
        }
        if self.api_name.is_empty() {
            return Err(Error::InvalidRecord("empty api name".into()));
        }
        if self.syntax_params.iter().any(|p| p.name.is_empty()) {
            return Err(Error::InvalidRecord(alloc::format!(
                "{}: empty parameter name",
                self.api_name
            )));
        }
        Ok(self)
    }
}

/// Checks that API names are unique across `records`.
pub fn validate_corpus(records: &[ApiDocRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.api_name.as_str()) {
            return Err(Error::DuplicateApi(r.api_name.clone()));
        }
    }
    Ok(())
}

pub fn corpus_names(records: &[ApiDocRecord]) -> BTreeSet<String> {
    records.iter().map(|r| r.api_name.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub api_mentions: Vec<String>,
    pub source_api: String,
}

/// Splits on `.`, `!` or `?` followed by whitespace or end of text. The
/// terminator stays with its sentence. Abbreviations are not recognised.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?') {
            let at_boundary = bytes.get(i + 1).is_none_or(|c| c.is_ascii_whitespace());
            if at_boundary {
                let s = text[start..=i].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = i + 1;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Identifier-like tokens: maximal runs of ASCII alphanumerics and `_`.
pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
}

const PRONOUN_SUBJECTS: [&str; 3] = ["This function", "This method", "It"];

fn replace_pronoun_subject(sentence: &str, api: &str) -> Option<String> {
    for p in PRONOUN_SUBJECTS {
        if let Some(rest) = sentence.strip_prefix(p) {
            let boundary = rest
                .chars()
                .next()
                .is_none_or(|c| !(c.is_ascii_alphanumeric() || c == '_'));
            if boundary {
                let mut s = String::with_capacity(api.len() + rest.len());
                s.push_str(api);
                s.push_str(rest);
                return Some(s);
            }
        }
    }
    None
}

/// Lower-cases the leading word when it is an ordinary capitalised word, so
/// "Opens the key." becomes "opens the key." once a subject is prepended.
fn decapitalize_plain_word(s: &str) -> String {
    let word_end = s
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(s.len());
    let word = &s[..word_end];
    let plain = word
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_uppercase())
        && word.chars().skip(1).all(|c| c.is_ascii_lowercase());
    if plain {
        let mut out = word.to_ascii_lowercase();
        out.push_str(&s[word_end..]);
        out
    } else {
        s.to_string()
    }
}

fn mentions(text: &str, corpus_names: &BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokens(text) {
        if corpus_names.contains(t) && !out.iter().any(|m| m == t) {
            out.push(t.to_string());
        }
    }
    out
}

/// Splits description and free text into sentences and rewrites each so that
/// it has an explicit API subject: a leading pronoun ("It", "This function",
/// "This method") becomes the record's API name, and a sentence that does not
/// start with a known API name gets the record's API name prepended.
pub fn normalize_sentences(record: &ApiDocRecord, corpus_names: &BTreeSet<String>) -> Vec<Sentence> {
    let api = record.api_name.as_str();
    let mut out = Vec::new();
    for part in [&record.description, &record.other_text] {
        for raw in split_sentences(part) {
            let text = replace_pronoun_subject(raw, api).unwrap_or_else(|| raw.to_string());
            let has_subject = tokens(&text)
                .next()
                .is_some_and(|first| corpus_names.contains(first) && text.starts_with(first));
            let text = if has_subject {
                text
            } else {
                let mut s = String::from(api);
                s.push(' ');
                s.push_str(&decapitalize_plain_word(&text));
                s
            };
            let api_mentions = mentions(&text, corpus_names);
            out.push(Sentence {
                text,
                api_mentions,
                source_api: api.to_string(),
            });
        }
    }
    out
}
