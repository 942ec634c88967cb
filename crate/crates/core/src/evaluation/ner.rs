//! Named-entity sets, a baseline extractor and precision/recall matching.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::align::fraction;
use super::metrics::{collapse_whitespace, levenshtein_ratio};
use super::EvaluationError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Person,
    Place,
    Org,
    #[default]
    Other,
}

impl std::str::FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "person" | "per" => Ok(Self::Person),
            "place" | "loc" => Ok(Self::Place),
            "org" | "organization" | "organisation" => Ok(Self::Org),
            "other" | "misc" | "" => Ok(Self::Other),
            other => Err(format!("unknown entity kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub kind: EntityKind,
}

/// Multiset of entities with normalised, non-empty surfaces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySet {
    entities: Vec<Entity>,
}

impl EntitySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an entity; surfaces that normalise to nothing are ignored.
    pub fn insert(&mut self, surface: &str, kind: EntityKind) {
        let surface = collapse_whitespace(surface);
        if !surface.is_empty() {
            self.entities.push(Entity { surface, kind });
        }
    }

    pub fn from_surfaces<'a>(items: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set = Self::new();
        for s in items {
            set.insert(s, EntityKind::Other);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter()
    }
}

/// Key used for matching: case-folded surface.
fn match_key(e: &Entity) -> String {
    e.surface.to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    /// Mean Levenshtein ratio over matched pairs; see [`mean_match_ratio`].
    pub match_ratio: f64,
}

/// Mean ratio over matched pairs. Without matches: 1 when both sides are
/// empty, 0 otherwise.
pub(crate) fn mean_match_ratio(sum: f64, matched: usize, both_empty: bool) -> f64 {
    match matched {
        0 if both_empty => 1.0,
        0 => 0.0,
        n => sum / n as f64,
    }
}

/// One-to-one matching: exact (case-folded) surfaces first, then remaining
/// entities by Levenshtein ratio at or above `fuzzy_threshold`, best first.
pub fn ner_prf(reference: &EntitySet, hypothesis: &EntitySet, fuzzy_threshold: f64) -> Prf {
    assert!(
        fuzzy_threshold > 0.0 && fuzzy_threshold <= 1.0,
        "threshold must lie in (0, 1]"
    );
    let r: Vec<String> = reference.iter().map(match_key).collect();
    let h: Vec<String> = hypothesis.iter().map(match_key).collect();
    let mut ref_used = vec![false; r.len()];
    let mut hyp_used = vec![false; h.len()];
    let mut matched = 0;
    let mut ratio_sum = 0.0;

    for (i, rk) in r.iter().enumerate() {
        if let Some(j) = (0..h.len()).find(|&j| !hyp_used[j] && &h[j] == rk) {
            ref_used[i] = true;
            hyp_used[j] = true;
            matched += 1;
            ratio_sum += 1.0;
        }
    }

    let mut cands = Vec::new();
    for (i, rk) in r.iter().enumerate().filter(|(i, _)| !ref_used[*i]) {
        for (j, hk) in h.iter().enumerate().filter(|(j, _)| !hyp_used[*j]) {
            let ratio = levenshtein_ratio(rk, hk);
            if ratio >= fuzzy_threshold {
                cands.push((ratio, i, j));
            }
        }
    }
    cands.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| r[a.1].cmp(&r[b.1]))
            .then_with(|| h[a.2].cmp(&h[b.2]))
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    for (ratio, i, j) in cands {
        if !ref_used[i] && !hyp_used[j] {
            ref_used[i] = true;
            hyp_used[j] = true;
            matched += 1;
            ratio_sum += ratio;
        }
    }

    Prf {
        precision: fraction(matched, h.len()),
        recall: fraction(matched, r.len()),
        matched,
        match_ratio: mean_match_ratio(ratio_sum, matched, r.is_empty() && h.is_empty()),
    }
}

/// Source of entities for a text.
pub trait NerProvider: Send + Sync {
    fn extract(&self, text: &str) -> EntitySet;
}

/// Known entity names, one per line, optionally followed by a tab and a kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: Vec<Entity>,
}

impl Gazetteer {
    pub fn parse(text: &str) -> Result<Self, EvaluationError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, kind) = match line.split_once('\t') {
                Some((name, kind)) => (
                    name,
                    kind.parse().map_err(|m| EvaluationError::Gazetteer { line: n + 1, message: m })?,
                ),
                None => (line, EntityKind::Other),
            };
            let surface = collapse_whitespace(name);
            if !surface.is_empty() {
                entries.push(Entity { surface, kind });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, EvaluationError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn entries(&self) -> &[Entity] {
        &self.entries
    }
}

const CONNECTORS: &[&str] = &["de", "d'", "du", "des", "la", "le", "van", "von", "del", "di", "y"];

fn is_capitalized(token: &str) -> bool {
    token.chars().find(|c| c.is_alphabetic()).is_some_and(char::is_uppercase)
}

/// Runs of two or more capitalised words (allowing lower-case particles
/// between them), plus every gazetteer name found in the text.
#[derive(Debug, Clone, Default)]
pub struct BaselineNer {
    pub gazetteer: Gazetteer,
}

impl BaselineNer {
    pub fn new(gazetteer: Gazetteer) -> Self {
        Self { gazetteer }
    }

    fn capitalized_runs(line: &str, out: &mut Vec<String>) {
        let tokens: Vec<&str> = line
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric() && c != '\''))
            .collect();
        let mut i = 0;
        while i < tokens.len() {
            if !is_capitalized(tokens[i]) {
                i += 1;
                continue;
            }
            let mut end = i + 1;
            let mut j = i + 1;
            while j < tokens.len() {
                if is_capitalized(tokens[j]) {
                    end = j + 1;
                    j += 1;
                } else if CONNECTORS.contains(&tokens[j].to_lowercase().as_str()) {
                    j += 1;
                } else {
                    break;
                }
            }
            if end - i >= 2 {
                out.push(tokens[i..end].join(" "));
            }
            i = end.max(i + 1);
        }
    }
}

impl NerProvider for BaselineNer {
    fn extract(&self, text: &str) -> EntitySet {
        let mut set = EntitySet::new();
        let folded = collapse_whitespace(text).to_lowercase();
        let mut gaz_hits = Vec::new();
        for e in &self.gazetteer.entries {
            let needle = e.surface.to_lowercase();
            let count = folded.matches(&needle).count();
            for _ in 0..count {
                set.insert(&e.surface, e.kind);
            }
            if count > 0 {
                gaz_hits.push(needle);
            }
        }
        let mut runs = Vec::new();
        for line in text.lines() {
            Self::capitalized_runs(line, &mut runs);
        }
        for run in runs {
            let key = run.to_lowercase();
            // skip runs already covered by a gazetteer name
            if !gaz_hits.iter().any(|g| g.contains(&key) || key.contains(g.as_str())) {
                set.insert(&run, EntityKind::Other);
            }
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets() {
        let a = EntitySet::from_surfaces(["Jean Vilar", "Avignon"]);
        let p = ner_prf(&a, &a, 0.85);
        assert_eq!((p.precision, p.recall), (1.0, 1.0));
    }

    #[test]
    fn fuzzy_accent_match() {
        let r = EntitySet::from_surfaces(["Guy Rétoré", "Sean O'Casey"]);
        let h = EntitySet::from_surfaces(["Guy Retoré"]);
        // 1 edit over 10 chars = 0.9
        assert_eq!(levenshtein_ratio("guy rétoré", "guy retoré"), 0.9);
        let p = ner_prf(&r, &h, 0.85);
        assert_eq!((p.precision, p.recall), (1.0, 0.5));
        assert_eq!(p.match_ratio, 0.9);
        let strict = ner_prf(&r, &h, 1.0);
        assert_eq!((strict.precision, strict.recall), (0.0, 0.0));
    }

    #[test]
    fn multiset_matching_is_one_to_one() {
        let r = EntitySet::from_surfaces(["Avignon", "Avignon"]);
        let h = EntitySet::from_surfaces(["Avignon"]);
        let p = ner_prf(&r, &h, 0.85);
        assert_eq!((p.precision, p.recall), (1.0, 0.5));
    }

    #[test]
    fn empty_sets() {
        let p = ner_prf(&EntitySet::new(), &EntitySet::new(), 0.9);
        assert_eq!((p.precision, p.recall), (1.0, 1.0));
    }

    #[test]
    fn gazetteer_parse() {
        let g = Gazetteer::parse("# names\nAvignon\tplace\nJean  Vilar\tperson\nLa Fabrica\n").unwrap();
        assert_eq!(g.entries().len(), 3);
        assert_eq!(g.entries()[1].surface, "Jean Vilar");
        assert_eq!(g.entries()[2].kind, EntityKind::Other);
        assert!(matches!(
            Gazetteer::parse("X\tnonsense"),
            Err(EvaluationError::Gazetteer { line: 1, .. })
        ));
    }

    #[test]
    fn baseline_extraction() {
        let g = Gazetteer::parse("Avignon\tplace\n").unwrap();
        let ner = BaselineNer::new(g);
        let set = ner.extract("Coquin de Coq\nmise en scène de Guy Rétoré à Avignon");
        let names: Vec<&str> = set.iter().map(|e| e.surface.as_str()).collect();
        assert!(names.contains(&"Avignon"));
        assert!(names.contains(&"Guy Rétoré"));
        assert!(names.contains(&"Coquin de Coq"));
    }
}
