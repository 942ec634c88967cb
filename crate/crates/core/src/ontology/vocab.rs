//! Controlled vocabularies loaded from tab-separated mapping files, and IRI
//! minting.

use std::collections::BTreeMap;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::model::Tier;
use super::OntologyError;

/// Getty AAT id for performances as creative events; the default
/// classification of a production.
pub const PERFORMANCES_TERM: &str = "300069200";
pub const PRIMARY_NAME_TERM: &str = "300404670";
pub const MINUTES_TERM: &str = "300379240";

pub const FUNDING_TERM: &str = "funding";
pub const SHOW_TERM: &str = "show";
pub const CAST_ADDED_TERM: &str = "cast-added";
pub const CAST_REMOVED_TERM: &str = "cast-removed";
pub const INFLUENCE_TERM: &str = "influence";

const BUILTIN_AAT: &str = include_str!("../../data/vocab/aat.tsv");
const BUILTIN_ROLES: &str = include_str!("../../data/vocab/bnf-roles.tsv");
const BUILTIN_LOCAL: &str = include_str!("../../data/vocab/local.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub id: String,
    pub label: String,
    pub iri: String,
    /// Short code, used for language terms (`fr`, `en`).
    pub code: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: BTreeMap<String, Term>,
}

impl Vocabulary {
    /// Parse `id<TAB>label<TAB>iri[<TAB>code]` lines; `#` starts a comment line.
    pub fn parse(name: &str, text: &str) -> Result<Self, OntologyError> {
        let mut terms = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let err = |message: String| OntologyError::Vocabulary {
                file: name.to_string(),
                line: n + 1,
                message,
            };
            if !(3..=4).contains(&cols.len()) || cols[..3].iter().any(|c| c.is_empty()) {
                return Err(err(format!("expected 3 or 4 tab-separated columns, got {line:?}")));
            }
            let term = Term {
                id: cols[0].to_string(),
                label: cols[1].to_string(),
                iri: cols[2].to_string(),
                code: cols.get(3).filter(|c| !c.is_empty()).map(|c| c.to_string()),
            };
            if terms.insert(term.id.clone(), term).is_some() {
                return Err(err(format!("duplicate term id {:?}", cols[0])));
            }
        }
        Ok(Self { terms })
    }

    pub fn get(&self, id: &str) -> Option<&Term> {
        self.terms.get(id)
    }

    pub fn by_iri(&self, iri: &str) -> Option<&Term> {
        self.terms.values().find(|t| t.iri == iri)
    }

    pub fn by_code(&self, code: &str) -> Option<&Term> {
        self.terms.values().find(|t| t.code.as_deref() == Some(code))
    }

    pub fn by_label(&self, label: &str) -> Option<&Term> {
        let label = label.trim().to_lowercase();
        self.terms.values().find(|t| t.label.to_lowercase() == label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.terms.values()
    }
}

/// The three vocabularies the model binds to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabularies {
    pub aat: Vocabulary,
    pub roles: Vocabulary,
    /// Terms of this toolkit's own namespace (funding, show, cast deltas).
    pub local: Vocabulary,
}

impl Vocabularies {
    pub fn builtin() -> Self {
        Self {
            aat: Vocabulary::parse("aat.tsv", BUILTIN_AAT).expect("bundled aat.tsv parses"),
            roles: Vocabulary::parse("bnf-roles.tsv", BUILTIN_ROLES).expect("bundled bnf-roles.tsv parses"),
            local: Vocabulary::parse("local.tsv", BUILTIN_LOCAL).expect("bundled local.tsv parses"),
        }
    }

    /// Load `aat.tsv`, `bnf-roles.tsv` and (optionally) `local.tsv` from `dir`.
    pub fn load(dir: &Path) -> Result<Self, OntologyError> {
        let read = |name: &str| -> Result<String, OntologyError> {
            std::fs::read_to_string(dir.join(name)).map_err(|e| OntologyError::Vocabulary {
                file: dir.join(name).display().to_string(),
                line: 0,
                message: e.to_string(),
            })
        };
        let local = match std::fs::read_to_string(dir.join("local.tsv")) {
            Ok(t) => Vocabulary::parse("local.tsv", &t)?,
            Err(_) => Vocabulary::parse("local.tsv", BUILTIN_LOCAL)?,
        };
        Ok(Self {
            aat: Vocabulary::parse("aat.tsv", &read("aat.tsv")?)?,
            roles: Vocabulary::parse("bnf-roles.tsv", &read("bnf-roles.tsv")?)?,
            local,
        })
    }

    /// Language term for a code such as `fr`.
    pub fn language(&self, code: &str) -> Option<&Term> {
        self.aat.by_code(code)
    }

    /// Any term, looked up by IRI across all vocabularies.
    pub fn term_by_iri(&self, iri: &str) -> Option<&Term> {
        self.aat
            .by_iri(iri)
            .or_else(|| self.roles.by_iri(iri))
            .or_else(|| self.local.by_iri(iri))
    }

    pub(crate) fn require<'a>(&self, vocab: &'a Vocabulary, id: &str) -> Result<&'a Term, OntologyError> {
        vocab
            .get(id)
            .ok_or_else(|| OntologyError::UnknownTerm(id.to_string()))
    }
}

/// Lower-case ASCII slug: accents dropped, other runs of non-alphanumerics
/// replaced by `-`.
pub fn slugify(text: &str) -> String {
    let mut out = String::new();
    let mut dash = false;
    for c in text.nfd().filter(|c| !is_combining_mark(*c)) {
        if c.is_ascii_alphanumeric() {
            if dash && !out.is_empty() {
                out.push('-');
            }
            dash = false;
            out.push(c.to_ascii_lowercase());
        } else {
            dash = true;
        }
    }
    out
}

/// Mints `<base><kind>/<slug>` IRIs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IriMinter {
    base: String,
}

pub const DEFAULT_BASE_IRI: &str = "https://example.org/showprog/";

impl Default for IriMinter {
    fn default() -> Self {
        Self::new(DEFAULT_BASE_IRI)
    }
}

impl IriMinter {
    pub fn new(base: impl Into<String>) -> Self {
        let mut base = base.into();
        if !base.ends_with('/') {
            base.push('/');
        }
        Self { base }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn kind_path(tier: Tier) -> &'static str {
        match tier {
            Tier::A => "concept",
            Tier::B => "production",
            Tier::C => "show",
            Tier::Person => "person",
            Tier::Group => "group",
            Tier::Place => "place",
            Tier::Object => "object",
        }
    }

    pub fn mint(&self, tier: Tier, name: &str) -> String {
        format!("{}{}/{}", self.base, Self::kind_path(tier), slugify(name))
    }
}

/// Last path segment of an IRI, used as the file name of its document.
pub fn iri_slug(iri: &str) -> &str {
    iri.trim_end_matches('/').rsplit(['/', '#']).next().unwrap_or(iri)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_vocabularies() {
        let v = Vocabularies::builtin();
        assert_eq!(
            v.aat.get(PERFORMANCES_TERM).unwrap().iri,
            "http://vocab.getty.edu/aat/300069200"
        );
        assert_eq!(v.language("fr").unwrap().id, "300388306");
        assert!(v.roles.get("director").is_some());
        for t in [FUNDING_TERM, SHOW_TERM, CAST_ADDED_TERM, CAST_REMOVED_TERM, INFLUENCE_TERM] {
            assert!(v.local.get(t).is_some(), "{t}");
        }
    }

    #[test]
    fn vocabulary_errors() {
        assert!(matches!(
            Vocabulary::parse("x.tsv", "a\tb"),
            Err(OntologyError::Vocabulary { line: 1, .. })
        ));
        assert!(Vocabulary::parse("x.tsv", "a\tb\tc\na\td\te").is_err());
        assert!(Vocabularies::load(Path::new("/nonexistent")).is_err());
    }

    #[test]
    fn slugs() {
        assert_eq!(slugify("Séverine Chavrier"), "severine-chavrier");
        assert_eq!(slugify("Absalon, Absalon !"), "absalon-absalon");
        assert_eq!(slugify("Festival d'Avignon 2024"), "festival-d-avignon-2024");
        let m = IriMinter::new("https://x.org/pa");
        assert_eq!(m.mint(Tier::B, "La Fabrica"), "https://x.org/pa/production/la-fabrica");
        assert_eq!(iri_slug("https://x.org/pa/production/la-fabrica"), "la-fabrica");
    }
}
