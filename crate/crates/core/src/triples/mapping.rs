//! From accepted draft triples to ontology entity fragments.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ontology::{
    Entity, Influence, IriMinter, LangString, NamedEntity, OntologyError, Participation, Production, ProductionGraph,
    ShowEvent, slugify, Tier, WorkConcept,
};

use super::catalog::{Binding, PropertyCatalog};
use super::draft::{Draft, ObjectValue};
use super::reward::formal_reward;
use super::TriplesError;

const FRENCH_MONTHS: [&str; 12] = [
    "janvier",
    "février",
    "mars",
    "avril",
    "mai",
    "juin",
    "juillet",
    "août",
    "septembre",
    "octobre",
    "novembre",
    "décembre",
];

/// Parse `12 juillet 1975`, `1er mai 1980` or an ISO date.
pub fn parse_french_date(text: &str) -> Option<NaiveDate> {
    let text = text.trim();
    if let Ok(d) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Some(d);
    }
    let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let [day, month, year] = &words[..] else {
        return None;
    };
    let day: u32 = day.strip_suffix("er").unwrap_or(day).parse().ok()?;
    // accents are optional
    let month = FRENCH_MONTHS.iter().position(|m| slugify(m) == slugify(month))? as u32 + 1;
    NaiveDate::from_ymd_opt(year.parse().ok()?, month, day)
}

/// A catalogued value with no place in the tiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub property: String,
    pub wikidata_id: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingOptions {
    /// Language of plain-text titles.
    pub default_language: String,
}

impl Default for MappingOptions {
    fn default() -> Self {
        Self {
            default_language: "fr".into(),
        }
    }
}

/// Entities produced from one draft. The production and show exist only when
/// the draft binds something to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityFragments {
    pub work: WorkConcept,
    pub production: Option<Production>,
    pub show: Option<ShowEvent>,
    /// People and groups referenced by the tiers.
    pub agents: Vec<Entity>,
    pub provenance: Vec<ProvenanceRecord>,
    pub warnings: Vec<String>,
}

impl EntityFragments {
    pub fn entities(&self) -> Vec<Entity> {
        let mut out = self.agents.clone();
        out.push(Entity::Work(self.work.clone()));
        out.extend(self.production.clone().map(Entity::Production));
        out.extend(self.show.clone().map(Entity::Show));
        out
    }

    /// Add the fragments to `graph`; entities already present with the same id
    /// (shared people, groups) are kept as they are.
    pub fn link_into(&self, graph: &mut ProductionGraph) -> Result<(), OntologyError> {
        for e in self.entities() {
            if graph.get(e.id()).is_none() {
                graph.add_entity(e)?;
            } else if matches!(e, Entity::Work(_) | Entity::Production(_) | Entity::Show(_)) {
                return Err(OntologyError::Conflict(e.id().to_string()));
            }
        }
        Ok(())
    }

    pub fn into_graph(self) -> Result<ProductionGraph, OntologyError> {
        let mut g = ProductionGraph::new();
        self.link_into(&mut g)?;
        Ok(g)
    }
}

/// Map a formally valid draft onto concept, production and show fragments.
/// A `director` participation also directs the concept; the first show's year
/// dates the concept.
pub fn triples_to_entities(
    draft: &Draft,
    catalog: &PropertyCatalog,
    minter: &IriMinter,
    opts: &MappingOptions,
) -> Result<EntityFragments, TriplesError> {
    let gate = formal_reward(draft, catalog);
    if !gate.formal_pass {
        return Err(TriplesError::Refused(gate.violations));
    }
    let lang_string = |o: &ObjectValue| {
        LangString::new(o.text(), o.language().unwrap_or(&opts.default_language))
    };

    let mut title = None;
    let mut influences = Vec::new();
    let mut participants = Vec::new();
    let mut funders = Vec::new();
    let mut show_date = None;
    let mut agents: Vec<Entity> = Vec::new();
    let mut provenance = Vec::new();
    let mut warnings = Vec::new();
    let add_agent = |tier: Tier, name: &str, agents: &mut Vec<Entity>| {
        let n = NamedEntity {
            id: minter.mint(tier, name),
            name: name.to_string(),
        };
        let id = n.id.clone();
        if !agents.iter().any(|a| a.id() == id) {
            agents.push(if tier == Tier::Group { Entity::Group(n) } else { Entity::Person(n) });
        }
        id
    };

    for t in &draft.triples {
        let entry = catalog.get(&t.property).expect("gated above");
        let value = t.object.text();
        let side = || ProvenanceRecord {
            property: entry.label.clone(),
            wikidata_id: entry.wikidata_id.clone(),
            value: t.object.to_string(),
        };
        match &entry.binding {
            Binding::WorkTitle => title = Some(lang_string(&t.object)),
            Binding::WorkInfluence { role } => {
                let target = add_agent(Tier::Person, value, &mut agents);
                influences.push(Influence {
                    target,
                    role: Some(role.clone()),
                });
            }
            Binding::Participant { role } => {
                let tier = if role == "production-company" { Tier::Group } else { Tier::Person };
                let agent = add_agent(tier, value, &mut agents);
                participants.push(Participation {
                    agent,
                    role: role.clone(),
                });
            }
            Binding::Funder => funders.push(add_agent(Tier::Group, value, &mut agents)),
            Binding::ShowDate => match parse_french_date(value) {
                Some(d) => show_date = Some(d),
                None => {
                    warnings.push(format!("unparseable date {value:?} kept verbatim"));
                    provenance.push(side());
                }
            },
            Binding::Provenance | Binding::Side => provenance.push(side()),
        }
    }

    let title = title.unwrap_or_else(|| LangString::new(draft.subject.clone(), opts.default_language.clone()));
    let director = participants.iter().find(|p| p.role == "director").map(|p| p.agent.clone());
    let year = show_date.map(|d| chrono::Datelike::year(&d));
    let director_name = director
        .as_ref()
        .and_then(|id| agents.iter().find(|a| a.id() == id))
        .map(Entity::label)
        .unwrap_or_default();
    let year_key = year.map(|y| y.to_string()).unwrap_or_default();
    let work = WorkConcept {
        id: minter.mint(Tier::A, &format!("{} {director_name} {year_key}", draft.subject)),
        title: title.clone(),
        director,
        year,
        influences,
    };

    let needs_production = !participants.is_empty() || !funders.is_empty() || show_date.is_some();
    let production = needs_production.then(|| {
        let mut p = Production::new(
            minter.mint(Tier::B, &format!("{} {director_name} {year_key}", draft.subject)),
            work.id.clone(),
            title,
        );
        p.cast_and_crew = participants;
        p.funders = funders;
        p
    });
    let show = match (&production, show_date) {
        (Some(p), Some(d)) => Some(ShowEvent::new(
            minter.mint(Tier::C, &format!("{} {director_name} {d}", draft.subject)),
            p.id.clone(),
            Some(d),
        )),
        _ => None,
    };
    Ok(EntityFragments {
        work,
        production,
        show,
        agents,
        provenance,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn french_dates() {
        assert_eq!(parse_french_date("12 juillet 1975"), NaiveDate::from_ymd_opt(1975, 7, 12));
        assert_eq!(parse_french_date("1er Août 1980"), NaiveDate::from_ymd_opt(1980, 8, 1));
        assert_eq!(parse_french_date("3 fevrier 1990"), NaiveDate::from_ymd_opt(1990, 2, 3));
        assert_eq!(parse_french_date("1975-07-12"), NaiveDate::from_ymd_opt(1975, 7, 12));
        assert_eq!(parse_french_date("31 février 1990"), None);
        assert_eq!(parse_french_date("été 1975"), None);
    }

    #[test]
    fn title_only_gives_concept_only() {
        let d = Draft::new(
            "Hamlet",
            vec![
                ("title", ObjectValue::Text("Hamlet".into())),
                ("instance of", ObjectValue::Text("Works".into())),
            ],
        );
        let f = triples_to_entities(&d, &PropertyCatalog::builtin(), &IriMinter::default(), &MappingOptions::default())
            .unwrap();
        assert!(f.production.is_none() && f.show.is_none() && f.agents.is_empty());
        assert_eq!(f.work.title, LangString::new("Hamlet", "fr"));
        assert_eq!(f.provenance.len(), 1);
        assert_eq!(f.entities().len(), 1);
    }

    #[test]
    fn gated_and_unparseable() {
        let c = PropertyCatalog::builtin();
        let m = IriMinter::default();
        let bad = Draft::new("X", vec![("publisher", ObjectValue::Text("Y".into()))]);
        assert!(matches!(
            triples_to_entities(&bad, &c, &m, &MappingOptions::default()),
            Err(TriplesError::Refused(v)) if v == ["unknown property: publisher"]
        ));
        let d = Draft::new("X", vec![("date of first performance", ObjectValue::Text("été 1975".into()))]);
        let f = triples_to_entities(&d, &c, &m, &MappingOptions::default()).unwrap();
        assert!(f.show.is_none());
        assert_eq!(f.warnings.len(), 1);
        assert_eq!(f.provenance[0].value, "été 1975");
    }
}
