//! Closed property catalog and the ontology field each property binds to.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::TriplesError;

const BUILTIN_CATALOG: &str = include_str!("../../data/catalog.tsv");

/// Where an accepted property lands in the three-tier model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    /// Title of the staging concept.
    WorkTitle,
    /// Influence on the concept, with the influencing agent's role.
    WorkInfluence { role: String },
    /// Cast or crew of the production; a `director` participation also
    /// directs the concept.
    Participant { role: String },
    Funder,
    /// Date of a show of the production.
    ShowDate,
    /// Source note.
    Provenance,
    /// Catalogued but not modelled; kept in the side record.
    Side,
}

impl FromStr for Binding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) if !a.trim().is_empty() => (h, Some(a.trim().to_string())),
            Some(_) => return Err(format!("binding {s:?} has an empty argument")),
            None => (s, None),
        };
        Ok(match (head, arg) {
            ("work.title", None) => Binding::WorkTitle,
            ("work.influence", Some(role)) => Binding::WorkInfluence { role },
            ("production.participant", Some(role)) => Binding::Participant { role },
            ("production.funder", None) => Binding::Funder,
            ("show.date", None) => Binding::ShowDate,
            ("provenance", None) => Binding::Provenance,
            ("side", None) => Binding::Side,
            _ => return Err(format!("unknown binding {s:?}")),
        })
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::WorkTitle => f.write_str("work.title"),
            Binding::WorkInfluence { role } => write!(f, "work.influence:{role}"),
            Binding::Participant { role } => write!(f, "production.participant:{role}"),
            Binding::Funder => f.write_str("production.funder"),
            Binding::ShowDate => f.write_str("show.date"),
            Binding::Provenance => f.write_str("provenance"),
            Binding::Side => f.write_str("side"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub label: String,
    pub wikidata_id: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

fn well_formed_id(id: &str) -> bool {
    id.len() > 1 && id.starts_with('P') && id[1..].bytes().all(|b| b.is_ascii_digit())
}

impl PropertyCatalog {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_CATALOG).expect("bundled catalog parses")
    }

    /// Parse `label<TAB>Pnnn<TAB>binding` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TriplesError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TriplesError::Catalog { line: n + 1, message };
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [label, id, binding] = cols[..] else {
                return Err(err(format!("expected 3 tab-separated columns, got {line:?}")));
            };
            if label.is_empty() {
                return Err(err("empty label".into()));
            }
            if !well_formed_id(id) {
                return Err(err(format!("malformed property id {id:?}")));
            }
            let binding = binding.parse().map_err(err)?;
            let entry = CatalogEntry {
                label: label.to_string(),
                wikidata_id: id.to_string(),
                binding,
            };
            if entries.insert(label.to_string(), entry).is_some() {
                return Err(err(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, TriplesError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Case-sensitive lookup after trimming.
    pub fn get(&self, label: &str) -> Option<&CatalogEntry> {
        self.entries.get(label.trim())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.get(label).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog() {
        let c = PropertyCatalog::builtin();
        assert_eq!(c.len(), 9);
        assert_eq!(c.get(" director ").unwrap().wikidata_id, "P57");
        assert!(c.get("Director").is_none());
        assert_eq!(
            c.get("production company").unwrap().binding,
            Binding::Participant {
                role: "production-company".into()
            }
        );
        for e in c.iter() {
            assert_eq!(e.binding.to_string().parse::<Binding>().unwrap(), e.binding);
        }
    }

    #[test]
    fn catalog_errors() {
        for (text, line) in [
            ("title\tP1476", 1),
            ("# c\ntitle\tQ5\twork.title", 2),
            ("title\tP1476\twork.title\ntitle\tP1\tside", 2),
            ("title\tP1476\twork.influence", 1),
            ("title\tP1476\twork.influence:", 1),
            ("title\tP\tside", 1),
        ] {
            assert!(
                matches!(PropertyCatalog::parse(text), Err(TriplesError::Catalog { line: l, .. }) if l == line),
                "{text:?}"
            );
        }
    }
}
