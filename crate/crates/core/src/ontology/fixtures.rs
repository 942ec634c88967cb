//! Reference graphs used by tests and examples.

use chrono::{NaiveDate, NaiveTime};

use super::model::{
    Entity, Influence, LangString, NamedEntity, Participation, Production, ProductionGraph, ShowEvent, Tier, TimeSpan,
    WorkConcept,
};
use super::vocab::IriMinter;

fn named(minter: &IriMinter, tier: Tier, name: &str) -> NamedEntity {
    NamedEntity {
        id: minter.mint(tier, name),
        name: name.to_string(),
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid fixture date")
}

/// Séverine Chavrier's staging of Faulkner's *Absalom, Absalom!* at the
/// Festival d'Avignon 2024: one concept, one production at La Fabrica
/// (2024-06-26 .. 2024-07-07) and two dated shows.
pub fn absalom(minter: &IriMinter) -> ProductionGraph {
    let chavrier = named(minter, Tier::Person, "Séverine Chavrier");
    let faulkner = named(minter, Tier::Person, "William Faulkner");
    let novel = named(minter, Tier::Object, "Absalom, Absalom!");
    let fabrica = named(minter, Tier::Place, "La Fabrica");

    let concept = WorkConcept {
        id: minter.mint(Tier::A, "Absalon Absalon Chavrier 2024"),
        title: LangString::new("Absalon, Absalon !", "fr"),
        director: Some(chavrier.id.clone()),
        year: Some(2024),
        influences: vec![
            Influence {
                target: faulkner.id.clone(),
                role: Some("author".into()),
            },
            Influence {
                target: novel.id.clone(),
                role: None,
            },
        ],
    };

    let mut production = Production::new(
        minter.mint(Tier::B, "Absalon Absalon Festival d'Avignon 2024"),
        concept.id.clone(),
        LangString::new("Absalon, Absalon !", "fr"),
    );
    production.venue = Some(fabrica.id.clone());
    production.timespan = Some(TimeSpan {
        start: date(2024, 6, 26),
        end: date(2024, 7, 7),
    });
    production.cast_and_crew.push(Participation {
        agent: chavrier.id.clone(),
        role: "director".into(),
    });

    let mut first = ShowEvent::new(
        minter.mint(Tier::C, "Absalon Absalon 2024-06-26"),
        production.id.clone(),
        Some(date(2024, 6, 26)),
    );
    first.time = NaiveTime::from_hms_opt(18, 0, 0);
    let second = ShowEvent::new(
        minter.mint(Tier::C, "Absalon Absalon 2024-06-28"),
        production.id.clone(),
        Some(date(2024, 6, 28)),
    );

    let mut g = ProductionGraph::new();
    for e in [
        Entity::Person(chavrier),
        Entity::Person(faulkner),
        Entity::Object(novel),
        Entity::Place(fabrica),
        Entity::Work(concept),
        Entity::Production(production),
        Entity::Show(first),
        Entity::Show(second),
    ] {
        g.add_entity(e).expect("fixture ids are unique");
    }
    g
}
