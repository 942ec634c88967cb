//! Token-delimited draft format: a thinking trace, a strategy trace and a
//! data section holding one subject with property/object pairs.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::TriplesError;

pub const THINKING_START: &str = "<|thinking_start|>";
pub const THINKING_END: &str = "<|thinking_end|>";
pub const STRATEGY_START: &str = "<|strategy_start|>";
pub const STRATEGY_END: &str = "<|strategy_end|>";
pub const DATA_START: &str = "<|data_start|>";
pub const DATA_END: &str = "<|data_end|>";
pub const SUBJECT: &str = "<|subject|>";
pub const PROPERTY: &str = "<|property|>";
pub const OBJECT: &str = "<|object|>";

/// Object of a triple: plain text, or a language-tagged literal written as
/// `{'text': ..., 'language': ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectValue {
    Text(String),
    Lang { text: String, language: String },
}

impl ObjectValue {
    pub fn text(&self) -> &str {
        match self {
            ObjectValue::Text(t) => t,
            ObjectValue::Lang { text, .. } => text,
        }
    }

    pub fn language(&self) -> Option<&str> {
        match self {
            ObjectValue::Text(_) => None,
            ObjectValue::Lang { language, .. } => Some(language),
        }
    }
}

impl fmt::Display for ObjectValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectValue::Text(t) => f.write_str(t),
            ObjectValue::Lang { text, language } => write!(f, "{{'text': '{text}', 'language': '{language}'}}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftTriple {
    pub property: String,
    pub object: ObjectValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub thinking: String,
    pub strategy: String,
    pub subject: String,
    pub triples: Vec<DraftTriple>,
}

impl Draft {
    /// Draft with empty traces.
    pub fn new(subject: impl Into<String>, triples: Vec<(&str, ObjectValue)>) -> Self {
        Self {
            thinking: String::new(),
            strategy: String::new(),
            subject: subject.into(),
            triples: triples
                .into_iter()
                .map(|(p, o)| DraftTriple {
                    property: p.to_string(),
                    object: o,
                })
                .collect(),
        }
    }

    pub fn render(&self) -> String {
        render_draft(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    ThinkingStart,
    ThinkingEnd,
    StrategyStart,
    StrategyEnd,
    DataStart,
    DataEnd,
    Subject,
    Property,
    Object,
}

const TOKENS: [(&str, Tok); 9] = [
    (THINKING_START, Tok::ThinkingStart),
    (THINKING_END, Tok::ThinkingEnd),
    (STRATEGY_START, Tok::StrategyStart),
    (STRATEGY_END, Tok::StrategyEnd),
    (DATA_START, Tok::DataStart),
    (DATA_END, Tok::DataEnd),
    (SUBJECT, Tok::Subject),
    (PROPERTY, Tok::Property),
    (OBJECT, Tok::Object),
];

/// Delimiters with their byte offsets, in order.
fn lex(raw: &str) -> Vec<(usize, usize, Tok)> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(rel) = raw[i..].find("<|") {
        let at = i + rel;
        match TOKENS.iter().find(|(s, _)| raw[at..].starts_with(s)) {
            Some((s, t)) => {
                out.push((at, at + s.len(), *t));
                i = at + s.len();
            }
            None => i = at + 2,
        }
    }
    out
}

fn malformed(offset: usize, message: impl Into<String>) -> TriplesError {
    TriplesError::MalformedDraft {
        offset,
        message: message.into(),
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

static LITERAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?s)^\{\s*['"]text['"]\s*:\s*['"](.*)['"]\s*,\s*['"]language['"]\s*:\s*['"]([^'"]*)['"]\s*\}$"#)
        .expect("literal regex")
});

/// Parse an object, accepting either quote character around literal parts.
pub fn parse_object(raw: &str) -> ObjectValue {
    let raw = collapse(raw);
    match LITERAL.captures(&raw) {
        Some(c) => ObjectValue::Lang {
            text: c[1].trim().to_string(),
            language: c[2].trim().to_lowercase(),
        },
        None => ObjectValue::Text(raw),
    }
}

/// Parse the full draft format. Thinking and strategy sections are optional
/// but, when present, must precede the data section in that order.
pub fn parse_draft(raw: &str) -> Result<Draft, TriplesError> {
    let toks = lex(raw);
    let mut thinking = None;
    let mut strategy = None;
    let mut data = None;
    let mut k = 0;
    while k < toks.len() {
        let (at, end, tok) = toks[k];
        let (close, slot_rank) = match tok {
            Tok::ThinkingStart => (Tok::ThinkingEnd, 0),
            Tok::StrategyStart => (Tok::StrategyEnd, 1),
            Tok::DataStart => (Tok::DataEnd, 2),
            _ => return Err(malformed(at, "delimiter outside of any section")),
        };
        let seen = [thinking.is_some(), strategy.is_some(), data.is_some()];
        if seen[slot_rank..].iter().any(|s| *s) {
            return Err(malformed(at, "section repeated or out of order"));
        }
        let close_at = toks[k + 1..].iter().position(|t| t.2 == close).map(|p| k + 1 + p);
        let Some(ci) = close_at else {
            return Err(malformed(at, "section is never closed"));
        };
        let inner = &toks[k + 1..ci];
        match slot_rank {
            0 | 1 => {
                if let Some(t) = inner.first() {
                    return Err(malformed(t.0, "unexpected delimiter inside trace"));
                }
                let text = raw[end..toks[ci].0].trim().to_string();
                if slot_rank == 0 {
                    thinking = Some(text);
                } else {
                    strategy = Some(text);
                }
            }
            _ => data = Some(parse_data(raw, end, inner, toks[ci].0)?),
        }
        k = ci + 1;
    }
    let Some((subject, triples)) = data else {
        return Err(malformed(raw.len(), "missing data section"));
    };
    Ok(Draft {
        thinking: thinking.unwrap_or_default(),
        strategy: strategy.unwrap_or_default(),
        subject,
        triples,
    })
}

type DataSection = (String, Vec<DraftTriple>);

fn parse_data(raw: &str, body_start: usize, toks: &[(usize, usize, Tok)], body_end: usize) -> Result<DataSection, TriplesError> {
    let segment = |i: usize| {
        let from = toks[i].1;
        let to = toks.get(i + 1).map_or(body_end, |t| t.0);
        &raw[from..to]
    };
    let first = toks.first().ok_or_else(|| malformed(body_start, "data section has no subject"))?;
    if first.2 != Tok::Subject {
        return Err(malformed(first.0, "data section must start with a subject"));
    }
    if !raw[body_start..first.0].trim().is_empty() {
        return Err(malformed(body_start, "text before subject"));
    }
    let subject = collapse(segment(0));
    if subject.is_empty() {
        return Err(malformed(first.0, "empty subject"));
    }
    let mut triples = Vec::new();
    let mut i = 1;
    while i < toks.len() {
        if toks[i].2 != Tok::Property {
            return Err(malformed(toks[i].0, "expected a property delimiter"));
        }
        if toks.get(i + 1).map(|t| t.2) != Some(Tok::Object) {
            return Err(malformed(toks[i].0, "property without object"));
        }
        let property = collapse(segment(i));
        if property.is_empty() {
            return Err(malformed(toks[i].0, "empty property"));
        }
        let object = parse_object(segment(i + 1));
        if object.text().is_empty() {
            return Err(malformed(toks[i + 1].0, "empty object"));
        }
        triples.push(DraftTriple { property, object });
        i += 2;
    }
    if triples.is_empty() {
        return Err(malformed(body_end, "data section has no triples"));
    }
    Ok((subject, triples))
}

/// Only the data section, as in a judge prompt.
pub fn render_data(draft: &Draft) -> String {
    let mut out = format!("{DATA_START}\n{SUBJECT}{}\n", draft.subject);
    for t in &draft.triples {
        out.push_str(&format!("{PROPERTY}{}{OBJECT}{}\n", t.property, t.object));
    }
    out.push_str(DATA_END);
    out
}

/// Canonical rendering; `parse_draft(render_draft(d))` returns `d` for any
/// parsed draft.
pub fn render_draft(draft: &Draft) -> String {
    format!(
        "{THINKING_START}\n{}\n{THINKING_END}\n\n{STRATEGY_START}\n{}\n{STRATEGY_END}\n\n{}\n",
        draft.thinking,
        draft.strategy,
        render_data(draft)
    )
}

/// Every data section found in `text`, in order; unparseable ones are skipped.
pub fn data_sections(text: &str) -> Vec<(String, Vec<DraftTriple>)> {
    let toks = lex(text);
    let mut out = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        if toks[k].2 == Tok::DataStart {
            if let Some(ci) = toks[k + 1..].iter().position(|t| t.2 == Tok::DataEnd).map(|p| k + 1 + p) {
                if let Ok(d) = parse_data(text, toks[k].1, &toks[k + 1..ci], toks[ci].0) {
                    out.push(d);
                }
                k = ci;
            }
        }
        k += 1;
    }
    out
}
