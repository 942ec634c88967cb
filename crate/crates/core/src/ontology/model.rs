//! Work (A) / Production (B) / Show (C) entities and graph validation.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use super::vocab::{Vocabularies, PERFORMANCES_TERM};
use super::OntologyError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LangString {
    pub value: String,
    /// Language code, e.g. `fr`.
    pub lang: String,
}

impl LangString {
    pub fn new(value: impl Into<String>, lang: impl Into<String>) -> Self {
        Self {
            value: value.into(),
            lang: lang.into(),
        }
    }
}

/// Something that shaped a staging concept: a text, an object, an author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Influence {
    pub target: String,
    /// Role of the target (a role vocabulary id), when it is an agent.
    pub role: Option<String>,
}

/// Tier A: a director's staging concept at a point in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkConcept {
    pub id: String,
    pub title: LangString,
    pub director: Option<String>,
    pub year: Option<i32>,
    pub influences: Vec<Influence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TimeSpan {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Participation {
    pub agent: String,
    /// Role vocabulary id.
    pub role: String,
}

/// Tier B: one production run of a concept at a venue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub id: String,
    pub realizes: String,
    pub title: LangString,
    pub venue: Option<String>,
    pub timespan: Option<TimeSpan>,
    pub cast_and_crew: Vec<Participation>,
    pub funders: Vec<String>,
    /// Classification vocabulary id.
    pub classification: String,
}

impl Production {
    /// A production with the default performances classification.
    pub fn new(id: impl Into<String>, realizes: impl Into<String>, title: LangString) -> Self {
        Self {
            id: id.into(),
            realizes: realizes.into(),
            title,
            venue: None,
            timespan: None,
            cast_and_crew: Vec::new(),
            funders: Vec::new(),
            classification: PERFORMANCES_TERM.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CastDelta {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CastChange {
    pub agent: String,
    pub role: String,
    pub change: CastDelta,
}

/// Tier C: a single dated show.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShowEvent {
    pub id: String,
    pub part_of: String,
    pub date: Option<NaiveDate>,
    pub time: Option<NaiveTime>,
    pub duration_minutes: Option<u32>,
    pub cast_changes: Vec<CastChange>,
    pub notes: Option<String>,
}

impl ShowEvent {
    pub fn new(id: impl Into<String>, part_of: impl Into<String>, date: Option<NaiveDate>) -> Self {
        Self {
            id: id.into(),
            part_of: part_of.into(),
            date,
            time: None,
            duration_minutes: None,
            cast_changes: Vec::new(),
            notes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Person,
    Group,
}

/// People, groups, places and objects referenced by the tiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntity {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Entity {
    Work(WorkConcept),
    Production(Production),
    Show(ShowEvent),
    Person(NamedEntity),
    Group(NamedEntity),
    Place(NamedEntity),
    /// A text or other human-made object.
    Object(NamedEntity),
}

/// Storage tier of an entity; also its directory in the JSON-LD layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    A,
    B,
    C,
    Person,
    Group,
    Place,
    Object,
}

impl Tier {
    pub const ALL: [Tier; 7] = [
        Tier::A,
        Tier::B,
        Tier::C,
        Tier::Person,
        Tier::Group,
        Tier::Place,
        Tier::Object,
    ];

    pub fn dir(self) -> &'static str {
        match self {
            Tier::A => "A",
            Tier::B => "B",
            Tier::C => "C",
            Tier::Person => "person",
            Tier::Group => "group",
            Tier::Place => "place",
            Tier::Object => "object",
        }
    }
}

impl Entity {
    pub fn id(&self) -> &str {
        match self {
            Entity::Work(e) => &e.id,
            Entity::Production(e) => &e.id,
            Entity::Show(e) => &e.id,
            Entity::Person(e) | Entity::Group(e) | Entity::Place(e) | Entity::Object(e) => &e.id,
        }
    }

    pub fn tier(&self) -> Tier {
        match self {
            Entity::Work(_) => Tier::A,
            Entity::Production(_) => Tier::B,
            Entity::Show(_) => Tier::C,
            Entity::Person(_) => Tier::Person,
            Entity::Group(_) => Tier::Group,
            Entity::Place(_) => Tier::Place,
            Entity::Object(_) => Tier::Object,
        }
    }

    /// Human-readable label.
    pub fn label(&self) -> String {
        match self {
            Entity::Work(e) => e.title.value.clone(),
            Entity::Production(e) => e.title.value.clone(),
            Entity::Show(e) => match (e.date, e.time) {
                (Some(d), Some(t)) => format!("Show {d} {}", t.format("%H:%M")),
                (Some(d), None) => format!("Show {d}"),
                _ => "Show".to_string(),
            },
            Entity::Person(e) | Entity::Group(e) | Entity::Place(e) | Entity::Object(e) => e.name.clone(),
        }
    }
}

/// Id-indexed entity store. References are plain ids resolved on validation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionGraph {
    entities: BTreeMap<String, Entity>,
}

impl ProductionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store `entity`; its id must be fresh. Dangling references are allowed
    /// until [`validate_graph`].
    pub fn add_entity(&mut self, entity: Entity) -> Result<(), OntologyError> {
        let id = entity.id().to_string();
        if id.is_empty() {
            return Err(OntologyError::InvalidInput("entity id is empty".into()));
        }
        if self.entities.contains_key(&id) {
            return Err(OntologyError::Conflict(id));
        }
        self.entities.insert(id, entity);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Entities in id order.
    pub fn iter(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn works(&self) -> impl Iterator<Item = &WorkConcept> {
        self.iter().filter_map(|e| match e {
            Entity::Work(w) => Some(w),
            _ => None,
        })
    }

    pub fn productions(&self) -> impl Iterator<Item = &Production> {
        self.iter().filter_map(|e| match e {
            Entity::Production(p) => Some(p),
            _ => None,
        })
    }

    pub fn shows(&self) -> impl Iterator<Item = &ShowEvent> {
        self.iter().filter_map(|e| match e {
            Entity::Show(s) => Some(s),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub violations: Vec<Violation>,
    /// Incomplete but legal data, such as a concept with no production yet.
    pub warnings: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    graph: &'a ProductionGraph,
    vocab: &'a Vocabularies,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, entity: &str, rule: &str, message: String) {
        self.out.push(Violation {
            entity: entity.to_string(),
            rule: rule.to_string(),
            message,
        });
    }

    /// `target` must resolve to an entity accepted by `ok`.
    fn reference(&mut self, from: &str, field: &str, target: &str, expected: &str, ok: impl Fn(&Entity) -> bool) {
        match self.graph.get(target) {
            None => self.push(from, "referential-integrity", format!("{field} -> {target} does not resolve")),
            Some(e) if !ok(e) => self.push(
                from,
                "reference-kind",
                format!("{field} -> {target} is not a {expected}"),
            ),
            Some(_) => {}
        }
    }

    fn role(&mut self, from: &str, role: &str) {
        if self.vocab.roles.get(role).is_none() {
            self.push(from, "role-vocabulary", format!("role {role:?} is not in the role vocabulary"));
        }
    }

    fn title(&mut self, from: &str, title: &LangString) {
        if title.value.trim().is_empty() {
            self.push(from, "title", "title is empty".into());
        }
        if self.vocab.language(&title.lang).is_none() {
            self.push(from, "language", format!("language {:?} is not in the vocabulary", title.lang));
        }
    }
}

fn is_agent(e: &Entity) -> bool {
    matches!(e, Entity::Person(_) | Entity::Group(_))
}

/// Check every schema rule. Violations are data: an empty list means valid.
pub fn validate_graph(graph: &ProductionGraph, vocab: &Vocabularies) -> Validation {
    let mut c = Checker {
        graph,
        vocab,
        out: Vec::new(),
    };
    let mut realized: BTreeSet<&str> = BTreeSet::new();
    let mut with_shows: BTreeSet<&str> = BTreeSet::new();
    for e in graph.iter() {
        match e {
            Entity::Production(p) => {
                realized.insert(&p.realizes);
            }
            Entity::Show(s) => {
                with_shows.insert(&s.part_of);
            }
            _ => {}
        }
    }

    for e in graph.iter() {
        match e {
            Entity::Work(w) => {
                c.title(&w.id, &w.title);
                match &w.director {
                    Some(d) => c.reference(&w.id, "director", d, "person or group", is_agent),
                    None => c.push(&w.id, "work-director", "a concept needs exactly one director".into()),
                }
                if w.year.is_none() {
                    c.push(&w.id, "work-year", "a concept needs exactly one year".into());
                }
                for inf in &w.influences {
                    c.reference(&w.id, "influence", &inf.target, "person, group or object", |e| {
                        matches!(e, Entity::Person(_) | Entity::Group(_) | Entity::Object(_))
                    });
                    if let Some(role) = &inf.role {
                        c.role(&w.id, role);
                    }
                }
            }
            Entity::Production(p) => {
                c.title(&p.id, &p.title);
                c.reference(&p.id, "realizes", &p.realizes, "work concept", |e| matches!(e, Entity::Work(_)));
                if let Some(v) = &p.venue {
                    c.reference(&p.id, "venue", v, "place", |e| matches!(e, Entity::Place(_)));
                }
                if let Some(ts) = p.timespan {
                    if ts.start > ts.end {
                        c.push(&p.id, "timespan-order", format!("starts {} after it ends {}", ts.start, ts.end));
                    }
                }
                let mut seen = BTreeSet::new();
                for part in &p.cast_and_crew {
                    c.reference(&p.id, "cast", &part.agent, "person or group", is_agent);
                    c.role(&p.id, &part.role);
                    if !seen.insert(part) {
                        c.push(
                            &p.id,
                            "unique-participation",
                            format!("{} as {} listed twice", part.agent, part.role),
                        );
                    }
                }
                for f in &p.funders {
                    c.reference(&p.id, "funder", f, "person or group", is_agent);
                }
                if vocab.aat.get(&p.classification).is_none() {
                    c.push(
                        &p.id,
                        "classification-vocabulary",
                        format!("classification {:?} is not in the vocabulary", p.classification),
                    );
                }
            }
            Entity::Show(s) => {
                c.reference(&s.id, "part_of", &s.part_of, "production", |e| matches!(e, Entity::Production(_)));
                if s.time.is_some() && s.date.is_none() {
                    c.push(&s.id, "show-time", "a time needs a date".into());
                }
                if let (Some(d), Some(Entity::Production(p))) = (s.date, graph.get(&s.part_of)) {
                    if let Some(ts) = p.timespan {
                        if !ts.contains(d) {
                            c.push(
                                &s.id,
                                "show-within-production",
                                format!("{d} lies outside {} .. {}", ts.start, ts.end),
                            );
                        }
                    }
                }
                for ch in &s.cast_changes {
                    c.reference(&s.id, "cast change", &ch.agent, "person or group", is_agent);
                    c.role(&s.id, &ch.role);
                }
            }
            Entity::Person(n) | Entity::Group(n) | Entity::Place(n) | Entity::Object(n) => {
                if n.name.trim().is_empty() {
                    c.push(&n.id, "name", "name is empty".into());
                }
            }
        }
    }

    let violations = std::mem::take(&mut c.out);
    for w in graph.works() {
        if !realized.contains(w.id.as_str()) {
            c.push(&w.id, "work-without-production", "no production realizes this concept yet".into());
        }
    }
    for p in graph.productions() {
        if !with_shows.contains(p.id.as_str()) {
            c.push(&p.id, "production-without-show", "no show recorded for this production yet".into());
        }
    }
    let mut v = Validation {
        violations,
        warnings: c.out,
    };
    v.violations.sort();
    v.warnings.sort();
    v
}
