//! N-Triples projection of the JSON-LD documents.
//!
//! Embedded nodes (names, time-spans, parts) get IRIs derived from their
//! parent: `<parent>/<key>/<index>`. Output lines are sorted and unique, and
//! the projection is lossless, so [`from_ntriples`] can rebuild the graph.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::jsonld::{entity_from_value, entity_to_value, LINKED_ART_CONTEXT};
use super::model::{validate_graph, ProductionGraph};
use super::vocab::Vocabularies;
use super::OntologyError;

const CRM: &str = "http://www.cidoc-crm.org/cidoc-crm/";
const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

/// JSON key -> CIDOC CRM property (local name).
const PROPERTIES: &[(&str, &str)] = &[
    ("begin_of_the_begin", "P82a_begin_of_the_begin"),
    ("carried_out_by", "P14_carried_out_by"),
    ("classified_as", "P2_has_type"),
    ("content", "P190_has_symbolic_content"),
    ("created_by", "P94i_was_created_by"),
    ("duration", "P191_had_duration"),
    ("end_of_the_begin", "P81a_end_of_the_begin"),
    ("end_of_the_end", "P82b_end_of_the_end"),
    ("identified_by", "P1_is_identified_by"),
    ("influenced_by", "P15_was_influenced_by"),
    ("language", "P72_has_language"),
    ("part", "P9_consists_of"),
    ("part_of", "P9i_forms_part_of"),
    ("referred_to_by", "P67i_is_referred_to_by"),
    ("timespan", "P4_has_time-span"),
    ("took_place_at", "P7_took_place_at"),
    ("unit", "P91_has_unit"),
    ("used_specific_object", "P16_used_specific_object"),
    ("value", "P90_has_value"),
];

/// Linked Art class -> CIDOC CRM class (local name).
const CLASSES: &[(&str, &str)] = &[
    ("Activity", "E7_Activity"),
    ("Creation", "E65_Creation"),
    ("Dimension", "E54_Dimension"),
    ("Group", "E74_Group"),
    ("HumanMadeObject", "E22_Human-Made_Object"),
    ("Language", "E56_Language"),
    ("LinguisticObject", "E33_Linguistic_Object"),
    ("MeasurementUnit", "E58_Measurement_Unit"),
    ("Name", "E33_E41_Linguistic_Appellation"),
    ("Person", "E21_Person"),
    ("Place", "E53_Place"),
    ("PropositionalObject", "E89_Propositional_Object"),
    ("TimeSpan", "E52_Time-Span"),
    ("Type", "E55_Type"),
];

/// Keys holding a single value rather than a list.
const SINGLE: &[&str] = &[
    "begin_of_the_begin",
    "content",
    "created_by",
    "duration",
    "end_of_the_begin",
    "end_of_the_end",
    "timespan",
    "unit",
    "value",
];

const TOP_LEVEL: &[&str] = &["PropositionalObject", "Activity", "Person", "Group", "Place", "HumanMadeObject"];

fn property_iri(key: &str) -> Option<String> {
    PROPERTIES.iter().find(|(k, _)| *k == key).map(|(_, p)| format!("{CRM}{p}"))
}

fn class_iri(class: &str) -> Option<String> {
    CLASSES.iter().find(|(c, _)| *c == class).map(|(_, e)| format!("{CRM}{e}"))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Object {
    Iri(String),
    Literal {
        value: String,
        lang: Option<String>,
        datatype: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

impl Triple {
    pub fn to_line(&self) -> String {
        let o = match &self.object {
            Object::Iri(i) => format!("<{i}>"),
            Object::Literal { value, lang: Some(l), .. } => format!("\"{}\"@{l}", escape(value)),
            Object::Literal {
                value,
                datatype: Some(d),
                ..
            } => format!("\"{}\"^^<{d}>", escape(value)),
            Object::Literal { value, .. } => format!("\"{}\"", escape(value)),
        };
        format!("<{}> <{}> {o} .", self.subject, self.predicate)
    }
}

struct Emitter<'a> {
    vocab: &'a Vocabularies,
    out: BTreeSet<Triple>,
}

impl Emitter<'_> {
    fn add(&mut self, s: &str, p: String, o: Object) {
        self.out.insert(Triple {
            subject: s.to_string(),
            predicate: p,
            object: o,
        });
    }

    fn literal_for(&self, node: &Map<String, Value>, key: &str, v: &Value, subject: &str) -> Result<Object, OntologyError> {
        let bad = || OntologyError::Malformed {
            id: subject.to_string(),
            message: format!("unsupported value for {key:?}"),
        };
        Ok(match (key, v) {
            ("value", Value::Number(n)) => Object::Literal {
                value: n.to_string(),
                lang: None,
                datatype: Some(XSD_INTEGER.into()),
            },
            ("begin_of_the_begin" | "end_of_the_begin" | "end_of_the_end", Value::String(s)) => Object::Literal {
                value: s.clone(),
                lang: None,
                datatype: Some(XSD_DATETIME.into()),
            },
            ("content", Value::String(s)) => {
                // titles carry their language as a tag
                let lang = node
                    .get("language")
                    .and_then(Value::as_array)
                    .and_then(|a| a.first())
                    .and_then(|l| l.get("id"))
                    .and_then(Value::as_str)
                    .and_then(|iri| self.vocab.aat.by_iri(iri))
                    .and_then(|t| t.code.clone());
                Object::Literal {
                    value: s.clone(),
                    lang,
                    datatype: None,
                }
            }
            _ => return Err(bad()),
        })
    }

    fn node(&mut self, subject: &str, node: &Map<String, Value>) -> Result<(), OntologyError> {
        for (key, v) in node {
            match key.as_str() {
                "@context" | "id" => {}
                "type" => {
                    let class = v.as_str().unwrap_or_default();
                    let iri = class_iri(class).ok_or_else(|| OntologyError::Unsupported(class.to_string()))?;
                    self.add(subject, RDF_TYPE.into(), Object::Iri(iri));
                }
                "_label" => self.add(
                    subject,
                    RDFS_LABEL.into(),
                    Object::Literal {
                        value: v.as_str().unwrap_or_default().to_string(),
                        lang: None,
                        datatype: None,
                    },
                ),
                _ => {
                    let pred = property_iri(key).ok_or_else(|| OntologyError::Unsupported(key.clone()))?;
                    let items: Vec<&Value> = match v {
                        Value::Array(a) => a.iter().collect(),
                        other => vec![other],
                    };
                    for (i, item) in items.into_iter().enumerate() {
                        match item {
                            Value::Object(child) => {
                                let child_iri = match child.get("id").and_then(Value::as_str) {
                                    Some(id) => id.to_string(),
                                    None => format!("{subject}/{key}/{i}"),
                                };
                                self.add(subject, pred.clone(), Object::Iri(child_iri.clone()));
                                self.node(&child_iri, child)?;
                            }
                            lit => {
                                let o = self.literal_for(node, key, lit, subject)?;
                                self.add(subject, pred.clone(), o);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Triples of a valid graph, sorted and without duplicates.
pub fn graph_triples(graph: &ProductionGraph, vocab: &Vocabularies) -> Result<Vec<Triple>, OntologyError> {
    let v = validate_graph(graph, vocab);
    if !v.is_valid() {
        return Err(OntologyError::Invalid(v.violations));
    }
    let mut em = Emitter {
        vocab,
        out: BTreeSet::new(),
    };
    for e in graph.iter() {
        let value = entity_to_value(e, graph, vocab)?;
        em.node(e.id(), value.as_object().expect("entity values are objects"))?;
    }
    Ok(em.out.into_iter().collect())
}

/// N-Triples text: one sorted line per triple.
pub fn to_ntriples(graph: &ProductionGraph, vocab: &Vocabularies) -> Result<String, OntologyError> {
    let mut lines: Vec<String> = graph_triples(graph, vocab)?.iter().map(Triple::to_line).collect();
    lines.sort();
    let mut s = lines.join("\n");
    if !s.is_empty() {
        s.push('\n');
    }
    Ok(s)
}

// --- parsing ---------------------------------------------------------------

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> OntologyError {
        OntologyError::Parse {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn iri(&mut self) -> Result<String, OntologyError> {
        self.skip_ws();
        let rest = self.rest();
        if !rest.starts_with('<') {
            return Err(self.err("expected an IRI"));
        }
        let end = rest.find('>').ok_or_else(|| self.err("unterminated IRI"))?;
        self.pos += end + 1;
        Ok(rest[1..end].to_string())
    }

    fn object(&mut self) -> Result<Object, OntologyError> {
        self.skip_ws();
        if self.rest().starts_with('<') {
            return Ok(Object::Iri(self.iri()?));
        }
        if !self.rest().starts_with('"') {
            return Err(self.err("expected an IRI or a literal"));
        }
        self.pos += 1;
        let mut value = String::new();
        let mut chars = self.rest().char_indices();
        let end = loop {
            match chars.next() {
                None => return Err(self.err("unterminated literal")),
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, 'r')) => value.push('\r'),
                    Some((_, 't')) => value.push('\t'),
                    Some((_, c @ ('"' | '\\'))) => value.push(c),
                    _ => return Err(self.err("unsupported escape")),
                },
                Some((_, c)) => value.push(c),
            }
        };
        self.pos += end + 1;
        let rest = self.rest();
        if let Some(tail) = rest.strip_prefix('@') {
            let len = tail.find(|c: char| !(c.is_ascii_alphanumeric() || c == '-')).unwrap_or(tail.len());
            self.pos += 1 + len;
            return Ok(Object::Literal {
                value,
                lang: Some(tail[..len].to_string()),
                datatype: None,
            });
        }
        if rest.starts_with("^^") {
            self.pos += 2;
            let dt = self.iri()?;
            return Ok(Object::Literal {
                value,
                lang: None,
                datatype: Some(dt),
            });
        }
        Ok(Object::Literal {
            value,
            lang: None,
            datatype: None,
        })
    }
}

/// Parse N-Triples lines (`#` comments and blank lines allowed).
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, OntologyError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut c = Cursor {
            s: trimmed,
            pos: 0,
            line: n + 1,
        };
        let subject = c.iri()?;
        let predicate = c.iri()?;
        let object = c.object()?;
        c.skip_ws();
        if c.rest() != "." {
            return Err(c.err("expected a terminating '.'"));
        }
        out.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(out)
}

struct Rebuilder<'a> {
    by_subject: BTreeMap<&'a str, Vec<&'a Triple>>,
}

fn trailing_index(iri: &str) -> usize {
    iri.rsplit('/').next().and_then(|s| s.parse().ok()).unwrap_or(0)
}

impl Rebuilder<'_> {
    fn class_name(&self, subject: &str) -> Option<&'static str> {
        self.by_subject.get(subject)?.iter().find_map(|t| match (&t.predicate[..], &t.object) {
            (RDF_TYPE, Object::Iri(iri)) => CLASSES
                .iter()
                .find(|(_, e)| iri.strip_prefix(CRM) == Some(*e))
                .map(|(c, _)| *c),
            _ => None,
        })
    }

    fn label(&self, subject: &str) -> Option<String> {
        self.by_subject.get(subject)?.iter().find_map(|t| match (&t.predicate[..], &t.object) {
            (RDFS_LABEL, Object::Literal { value, .. }) => Some(value.clone()),
            _ => None,
        })
    }

    fn reference(&self, iri: &str) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), json!(iri));
        if let Some(c) = self.class_name(iri) {
            m.insert("type".into(), json!(c));
        }
        if let Some(l) = self.label(iri) {
            m.insert("_label".into(), json!(l));
        }
        Value::Object(m)
    }

    fn node(&self, subject: &str) -> Result<Map<String, Value>, OntologyError> {
        let mut m = Map::new();
        let mut lists: BTreeMap<&str, Vec<(usize, String, Value)>> = BTreeMap::new();
        for t in self.by_subject.get(subject).map_or(&[][..], Vec::as_slice) {
            match (&t.predicate[..], &t.object) {
                (RDF_TYPE, _) => {
                    let c = self
                        .class_name(subject)
                        .ok_or_else(|| OntologyError::Unsupported(format!("type of {subject}")))?;
                    m.insert("type".into(), json!(c));
                }
                (RDFS_LABEL, Object::Literal { value, .. }) => {
                    m.insert("_label".into(), json!(value));
                }
                (pred, obj) => {
                    let key = PROPERTIES
                        .iter()
                        .find(|(_, p)| pred.strip_prefix(CRM) == Some(*p))
                        .map(|(k, _)| *k)
                        .ok_or_else(|| OntologyError::Unsupported(pred.to_string()))?;
                    let (order, sort_key, value) = match obj {
                        Object::Iri(iri) if iri.starts_with(&format!("{subject}/{key}/")) => {
                            (trailing_index(iri), String::new(), Value::Object(self.node(iri)?))
                        }
                        Object::Iri(iri) => (0, iri.clone(), self.reference(iri)),
                        Object::Literal { value, datatype, .. } => {
                            let v = if datatype.as_deref() == Some(XSD_INTEGER) {
                                json!(value.parse::<u64>().map_err(|_| OntologyError::Malformed {
                                    id: subject.to_string(),
                                    message: format!("bad integer {value:?}"),
                                })?)
                            } else {
                                json!(value)
                            };
                            (0, String::new(), v)
                        }
                    };
                    lists.entry(key).or_default().push((order, sort_key, value));
                }
            }
        }
        for (key, mut items) in lists {
            items.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            let mut values: Vec<Value> = items.into_iter().map(|(_, _, v)| v).collect();
            if SINGLE.contains(&key) && values.len() == 1 {
                m.insert(key.into(), values.pop().unwrap());
            } else {
                m.insert(key.into(), Value::Array(values));
            }
        }
        Ok(m)
    }
}

/// Rebuild a graph from N-Triples produced by [`to_ntriples`].
pub fn from_ntriples(text: &str, vocab: &Vocabularies) -> Result<ProductionGraph, OntologyError> {
    let triples = parse_ntriples(text)?;
    let mut by_subject: BTreeMap<&str, Vec<&Triple>> = BTreeMap::new();
    for t in &triples {
        by_subject.entry(&t.subject).or_default().push(t);
    }
    let rb = Rebuilder { by_subject };
    // a subject is embedded when its IRI extends the IRI of a subject linking to it
    let embedded: BTreeSet<&str> = triples
        .iter()
        .filter_map(|t| match &t.object {
            Object::Iri(o) if o.starts_with(&format!("{}/", t.subject)) => Some(o.as_str()),
            _ => None,
        })
        .collect();
    let mut graph = ProductionGraph::new();
    for subject in rb.by_subject.keys() {
        if embedded.contains(subject) {
            continue;
        }
        let Some(class) = rb.class_name(subject) else {
            continue;
        };
        if !TOP_LEVEL.contains(&class) {
            continue;
        }
        // references to entities outside the export carry only a type and label
        if rb.by_subject[subject]
            .iter()
            .all(|t| t.predicate == RDF_TYPE || t.predicate == RDFS_LABEL)
        {
            continue;
        }
        let mut m = rb.node(subject)?;
        m.insert("@context".into(), json!(LINKED_ART_CONTEXT));
        m.insert("id".into(), json!(subject));
        graph.add_entity(entity_from_value(&Value::Object(m), vocab)?)?;
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_escaping_round_trips() {
        let t = Triple {
            subject: "http://x/s".into(),
            predicate: "http://x/p".into(),
            object: Object::Literal {
                value: "a \"b\"\n\\c".into(),
                lang: Some("fr".into()),
                datatype: None,
            },
        };
        let line = t.to_line();
        assert_eq!(parse_ntriples(&line).unwrap(), [t]);
    }

    #[test]
    fn parse_errors_have_locations() {
        let r = parse_ntriples("<a> <b> <c> .\n<a> <b> \"open .\n");
        assert!(matches!(r, Err(OntologyError::Parse { line: 2, .. })));
        assert!(parse_ntriples("<a> <b> <c>").is_err());
    }

    #[test]
    fn empty_graph_is_empty_text() {
        let g = ProductionGraph::new();
        assert_eq!(to_ntriples(&g, &Vocabularies::builtin()).unwrap(), "");
    }
}
