//! Three-tier performing-arts model: staging concept (A), production (B)
//! and show (C), with JSON-LD and N-Triples serialization.

mod fixtures;
mod jsonld;
mod model;
mod ntriples;
mod vocab;

use thiserror::Error;

pub use fixtures::absalom;
pub use jsonld::{
    entity_from_value, entity_to_value, from_jsonld, parse_document, read_jsonld_tree, to_jsonld, write_jsonld_tree,
    JsonLdDocument, LINKED_ART_CONTEXT,
};
pub use model::{
    validate_graph, AgentKind, CastChange, CastDelta, Entity, Influence, LangString, NamedEntity, Participation,
    Production, ProductionGraph, ShowEvent, Tier, TimeSpan, Validation, Violation, WorkConcept,
};
pub use ntriples::{from_ntriples, graph_triples, parse_ntriples, to_ntriples, Object, Triple};
pub use vocab::{
    iri_slug, slugify, IriMinter, Term, Vocabularies, Vocabulary, DEFAULT_BASE_IRI, FUNDING_TERM, PERFORMANCES_TERM,
};

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("entity {0} already exists")]
    Conflict(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("graph has {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{id}: {message}")]
    Malformed { id: String, message: String },
    #[error("unsupported pattern: {0}")]
    Unsupported(String),
    #[error("unknown vocabulary term {0}")]
    UnknownTerm(String),
    #[error("{file}:{line}: {message}")]
    Vocabulary { file: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn setup() -> (ProductionGraph, Vocabularies, IriMinter) {
        let m = IriMinter::default();
        (absalom(&m), Vocabularies::builtin(), m)
    }

    #[test]
    fn absalom_is_valid() {
        let (g, v, _) = setup();
        let val = validate_graph(&g, &v);
        assert!(val.violations.is_empty(), "{:?}", val.violations);
        assert!(val.warnings.is_empty(), "{:?}", val.warnings);
    }

    #[test]
    fn add_entity_rules() {
        let m = IriMinter::default();
        let mut g = ProductionGraph::new();
        let a = WorkConcept {
            id: m.mint(Tier::A, "x"),
            title: LangString::new("X", "fr"),
            director: None,
            year: Some(2000),
            influences: vec![],
        };
        g.add_entity(Entity::Work(a.clone())).unwrap();
        let b = Production::new(m.mint(Tier::B, "x"), a.id.clone(), LangString::new("X", "fr"));
        g.add_entity(Entity::Production(b)).unwrap();
        assert_eq!(g.len(), 2);
        assert!(matches!(g.add_entity(Entity::Work(a)), Err(OntologyError::Conflict(_))));
        // dangling reference accepted now, flagged later
        let orphan = Production::new(m.mint(Tier::B, "y"), m.mint(Tier::A, "absent"), LangString::new("Y", "fr"));
        g.add_entity(Entity::Production(orphan)).unwrap();
        let rules: Vec<String> = validate_graph(&g, &Vocabularies::builtin())
            .violations
            .into_iter()
            .map(|v| v.rule)
            .collect();
        assert_eq!(rules, ["work-director", "referential-integrity"]);
    }

    #[test]
    fn show_outside_production_span() {
        let (mut g, v, m) = setup();
        let b = g.productions().next().unwrap().id.clone();
        let late = ShowEvent::new(m.mint(Tier::C, "late"), b, NaiveDate::from_ymd_opt(2024, 7, 8));
        g.add_entity(Entity::Show(late)).unwrap();
        let val = validate_graph(&g, &v);
        assert_eq!(val.violations.len(), 1);
        assert_eq!(val.violations[0].rule, "show-within-production");
    }

    #[test]
    fn partial_data_only_warns() {
        let (g, v, _) = setup();
        let mut partial = ProductionGraph::new();
        for e in g.iter().filter(|e| !matches!(e, Entity::Show(_))) {
            partial.add_entity(e.clone()).unwrap();
        }
        let val = validate_graph(&partial, &v);
        assert!(val.is_valid());
        assert_eq!(val.warnings[0].rule, "production-without-show");
    }

    #[test]
    fn duplicate_participation_and_unknown_role() {
        let (g, v, _) = setup();
        let mut g2 = ProductionGraph::new();
        for e in g.iter() {
            let mut e = e.clone();
            if let Entity::Production(p) = &mut e {
                let first = p.cast_and_crew[0].clone();
                p.cast_and_crew.push(first.clone());
                p.cast_and_crew.push(Participation {
                    agent: first.agent,
                    role: "juggler".into(),
                });
            }
            g2.add_entity(e).unwrap();
        }
        let rules: Vec<String> = validate_graph(&g2, &v).violations.into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&"unique-participation".to_string()));
        assert!(rules.contains(&"role-vocabulary".to_string()));
    }

    #[test]
    fn jsonld_round_trip_and_classification() {
        let (g, v, _) = setup();
        let docs = to_jsonld(&g, &v).unwrap();
        assert_eq!(docs.len(), g.len());
        let b = docs.iter().find(|d| d.tier == Tier::B).unwrap();
        assert!(b.text.contains("http://vocab.getty.edu/aat/300069200"));
        assert!(b.text.contains("\"used_specific_object\""));
        assert_eq!(b.relative_path(), std::path::Path::new("B/absalon-absalon-festival-d-avignon-2024.json"));
        let back = from_jsonld(docs.iter().map(|d| d.text.as_str()), &v).unwrap();
        assert_eq!(back, g);
        assert_eq!(to_jsonld(&back, &v).unwrap(), docs);
    }

    #[test]
    fn empty_graph_serializes_to_nothing() {
        let v = Vocabularies::builtin();
        assert!(to_jsonld(&ProductionGraph::new(), &v).unwrap().is_empty());
    }

    #[test]
    fn invalid_graph_refused() {
        let (mut g, v, m) = setup();
        let orphan = ShowEvent::new(m.mint(Tier::C, "orphan"), m.mint(Tier::B, "none"), None);
        g.add_entity(Entity::Show(orphan)).unwrap();
        assert!(matches!(to_jsonld(&g, &v), Err(OntologyError::Invalid(vs)) if vs.len() == 1));
        assert!(matches!(to_ntriples(&g, &v), Err(OntologyError::Invalid(_))));
    }

    #[test]
    fn malformed_documents() {
        let v = Vocabularies::builtin();
        assert!(matches!(
            parse_document("{\"id\": \"x\", \"type\": ", &v),
            Err(OntologyError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_document("{\"id\": \"x\", \"type\": \"Spaceship\"}", &v),
            Err(OntologyError::Unsupported(c)) if c == "Spaceship"
        ));
    }

    #[test]
    fn ntriples_minimal_work() {
        let m = IriMinter::default();
        let v = Vocabularies::builtin();
        let mut g = ProductionGraph::new();
        let p = NamedEntity {
            id: m.mint(Tier::Person, "Jean Vilar"),
            name: "Jean Vilar".into(),
        };
        let a = WorkConcept {
            id: m.mint(Tier::A, "roi lear"),
            title: LangString::new("Le Roi Lear", "fr"),
            director: Some(p.id.clone()),
            year: Some(1953),
            influences: vec![],
        };
        g.add_entity(Entity::Person(p)).unwrap();
        g.add_entity(Entity::Work(a.clone())).unwrap();
        let nt = to_ntriples(&g, &v).unwrap();
        let preds: std::collections::BTreeSet<&str> = nt
            .lines()
            .filter(|l| l.starts_with(&format!("<{}> ", a.id)))
            .map(|l| l.split(' ').nth(1).unwrap())
            .collect();
        assert_eq!(
            preds.into_iter().collect::<Vec<_>>(),
            [
                "<http://www.cidoc-crm.org/cidoc-crm/P1_is_identified_by>",
                "<http://www.cidoc-crm.org/cidoc-crm/P94i_was_created_by>",
                "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>",
                "<http://www.w3.org/2000/01/rdf-schema#label>",
            ]
        );
        assert!(nt.contains("\"Le Roi Lear\"@fr"));
        assert!(nt.contains("\"1953-01-01T00:00:00Z\"^^<http://www.w3.org/2001/XMLSchema#dateTime>"));
    }

    #[test]
    fn ntriples_round_trip() {
        let (g, v, _) = setup();
        let nt = to_ntriples(&g, &v).unwrap();
        let mut lines: Vec<&str> = nt.lines().collect();
        let n = lines.len();
        lines.sort();
        lines.dedup();
        assert_eq!(lines.len(), n);
        let back = from_ntriples(&nt, &v).unwrap();
        assert_eq!(back, g);
        assert_eq!(to_ntriples(&back, &v).unwrap(), nt);
    }

    #[test]
    fn arrows_point_down_the_tiers() {
        let (g, v, _) = setup();
        let nt = to_ntriples(&g, &v).unwrap();
        let b = g.productions().next().unwrap();
        let a = g.works().next().unwrap();
        assert!(nt.contains(&format!("<{}> <http://www.cidoc-crm.org/cidoc-crm/P16_used_specific_object> <{}> .", b.id, a.id)));
        assert!(!nt.lines().any(|l| l.starts_with(&format!("<{}> ", a.id)) && l.ends_with(&format!("<{}> .", b.id))));
    }
}
