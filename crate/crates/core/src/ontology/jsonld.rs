//! JSON-LD documents in the Linked Art style, one per top-level entity.

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveTime};
use serde_json::{json, Map, Value};

use super::model::{
    validate_graph, CastChange, CastDelta, Entity, Influence, LangString, NamedEntity, Participation, Production,
    ProductionGraph, ShowEvent, Tier, TimeSpan, WorkConcept,
};
use super::vocab::{
    iri_slug, Term, Vocabularies, CAST_ADDED_TERM, CAST_REMOVED_TERM, FUNDING_TERM, INFLUENCE_TERM, MINUTES_TERM,
    PRIMARY_NAME_TERM, SHOW_TERM,
};
use super::OntologyError;
use crate::fsutil::write_if_changed;

pub const LINKED_ART_CONTEXT: &str = "https://linked.art/ns/v1/linked-art.json";

/// One serialized entity and where it lives in the document tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonLdDocument {
    pub id: String,
    pub tier: Tier,
    pub text: String,
}

impl JsonLdDocument {
    /// `<tier>/<slug>.json`
    pub fn relative_path(&self) -> PathBuf {
        Path::new(self.tier.dir()).join(format!("{}.json", iri_slug(&self.id)))
    }
}

// --- writing ---------------------------------------------------------------

fn class_of(e: &Entity) -> &'static str {
    match e {
        Entity::Work(_) => "PropositionalObject",
        Entity::Production(_) | Entity::Show(_) => "Activity",
        Entity::Person(_) => "Person",
        Entity::Group(_) => "Group",
        Entity::Place(_) => "Place",
        Entity::Object(_) => "HumanMadeObject",
    }
}

fn entity_ref(graph: &ProductionGraph, id: &str) -> Value {
    match graph.get(id) {
        Some(e) => json!({"id": id, "type": class_of(e), "_label": e.label()}),
        None => json!({"id": id}),
    }
}

fn term_ref(t: &Term, class: &str) -> Value {
    json!({"id": t.iri, "type": class, "_label": t.label})
}

/// Type references sorted by IRI, so that the order is canonical.
fn classified(mut terms: Vec<&Term>) -> Value {
    terms.sort_by(|a, b| a.iri.cmp(&b.iri));
    Value::Array(terms.into_iter().map(|t| term_ref(t, "Type")).collect())
}

fn title_name(title: &LangString, vocab: &Vocabularies) -> Result<Value, OntologyError> {
    let lang = vocab
        .language(&title.lang)
        .ok_or_else(|| OntologyError::UnknownTerm(title.lang.clone()))?;
    let primary = vocab.require(&vocab.aat, PRIMARY_NAME_TERM)?;
    Ok(json!([{
        "type": "Name",
        "classified_as": classified(vec![primary]),
        "content": title.value,
        "language": [term_ref(lang, "Language")],
    }]))
}

fn datetime(d: NaiveDate, t: NaiveTime) -> String {
    format!("{}T{}Z", d.format("%Y-%m-%d"), t.format("%H:%M:%S"))
}

fn day_span(start: NaiveDate, end: NaiveDate) -> Value {
    json!({
        "type": "TimeSpan",
        "begin_of_the_begin": datetime(start, NaiveTime::MIN),
        "end_of_the_end": datetime(end, NaiveTime::from_hms_opt(23, 59, 59).unwrap()),
    })
}

fn agent_part(graph: &ProductionGraph, class: &str, terms: Vec<&Term>, agent: &str) -> Value {
    json!({
        "type": class,
        "classified_as": classified(terms),
        "carried_out_by": [entity_ref(graph, agent)],
    })
}

fn work_value(w: &WorkConcept, graph: &ProductionGraph, vocab: &Vocabularies) -> Result<Map<String, Value>, OntologyError> {
    let mut m = Map::new();
    m.insert("identified_by".into(), title_name(&w.title, vocab)?);
    let mut creation = Map::new();
    if let Some(d) = &w.director {
        creation.insert("carried_out_by".into(), json!([entity_ref(graph, d)]));
    }
    if let Some(y) = w.year {
        let start = NaiveDate::from_ymd_opt(y, 1, 1).ok_or_else(|| OntologyError::InvalidInput(format!("year {y}")))?;
        let end = NaiveDate::from_ymd_opt(y, 12, 31).unwrap();
        creation.insert("timespan".into(), day_span(start, end));
    }
    if !w.influences.is_empty() {
        let influence = vocab.require(&vocab.local, INFLUENCE_TERM)?;
        let mut parts = Vec::new();
        for inf in &w.influences {
            let mut terms = vec![influence];
            if let Some(r) = &inf.role {
                terms.push(vocab.require(&vocab.roles, r)?);
            }
            parts.push(json!({
                "type": "Creation",
                "classified_as": classified(terms),
                "influenced_by": [entity_ref(graph, &inf.target)],
            }));
        }
        creation.insert("part".into(), Value::Array(parts));
    }
    if !creation.is_empty() {
        creation.insert("type".into(), json!("Creation"));
        m.insert("created_by".into(), Value::Object(creation));
    }
    Ok(m)
}

fn production_value(
    p: &Production,
    graph: &ProductionGraph,
    vocab: &Vocabularies,
) -> Result<Map<String, Value>, OntologyError> {
    let mut m = Map::new();
    m.insert(
        "classified_as".into(),
        classified(vec![vocab.require(&vocab.aat, &p.classification)?]),
    );
    m.insert("identified_by".into(), title_name(&p.title, vocab)?);
    m.insert("used_specific_object".into(), json!([entity_ref(graph, &p.realizes)]));
    if let Some(v) = &p.venue {
        m.insert("took_place_at".into(), json!([entity_ref(graph, v)]));
    }
    if let Some(ts) = p.timespan {
        m.insert("timespan".into(), day_span(ts.start, ts.end));
    }
    let mut parts = Vec::new();
    for c in &p.cast_and_crew {
        parts.push(agent_part(graph, "Activity", vec![vocab.require(&vocab.roles, &c.role)?], &c.agent));
    }
    let funding = vocab.require(&vocab.local, FUNDING_TERM)?;
    for f in &p.funders {
        parts.push(agent_part(graph, "Activity", vec![funding], f));
    }
    if !parts.is_empty() {
        m.insert("part".into(), Value::Array(parts));
    }
    Ok(m)
}

fn show_value(s: &ShowEvent, graph: &ProductionGraph, vocab: &Vocabularies) -> Result<Map<String, Value>, OntologyError> {
    let mut m = Map::new();
    m.insert("classified_as".into(), classified(vec![vocab.require(&vocab.local, SHOW_TERM)?]));
    m.insert("part_of".into(), json!([entity_ref(graph, &s.part_of)]));
    if let Some(d) = s.date {
        let mut span = day_span(d, d);
        if let Some(t) = s.time {
            // a known start time pins both bounds of the beginning
            span["begin_of_the_begin"] = json!(datetime(d, t));
            span["end_of_the_begin"] = json!(datetime(d, t));
        }
        m.insert("timespan".into(), span);
    }
    if let Some(mins) = s.duration_minutes {
        m.insert(
            "duration".into(),
            json!({
                "type": "Dimension",
                "value": mins,
                "unit": term_ref(vocab.require(&vocab.aat, MINUTES_TERM)?, "MeasurementUnit"),
            }),
        );
    }
    if !s.cast_changes.is_empty() {
        let mut parts = Vec::new();
        for ch in &s.cast_changes {
            let delta = match ch.change {
                CastDelta::Added => CAST_ADDED_TERM,
                CastDelta::Removed => CAST_REMOVED_TERM,
            };
            let terms = vec![vocab.require(&vocab.roles, &ch.role)?, vocab.require(&vocab.local, delta)?];
            parts.push(agent_part(graph, "Activity", terms, &ch.agent));
        }
        m.insert("part".into(), Value::Array(parts));
    }
    if let Some(n) = &s.notes {
        m.insert(
            "referred_to_by".into(),
            json!([{"type": "LinguisticObject", "content": n}]),
        );
    }
    Ok(m)
}

fn named_value(n: &NamedEntity) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("identified_by".into(), json!([{"type": "Name", "content": n.name}]));
    m
}

/// JSON value of one entity, with references labelled from `graph`.
pub fn entity_to_value(e: &Entity, graph: &ProductionGraph, vocab: &Vocabularies) -> Result<Value, OntologyError> {
    let mut m = match e {
        Entity::Work(w) => work_value(w, graph, vocab)?,
        Entity::Production(p) => production_value(p, graph, vocab)?,
        Entity::Show(s) => show_value(s, graph, vocab)?,
        Entity::Person(n) | Entity::Group(n) | Entity::Place(n) | Entity::Object(n) => named_value(n),
    };
    m.insert("@context".into(), json!(LINKED_ART_CONTEXT));
    m.insert("id".into(), json!(e.id()));
    m.insert("type".into(), json!(class_of(e)));
    m.insert("_label".into(), json!(e.label()));
    Ok(Value::Object(m))
}

/// Serialize a valid graph, one document per entity in id order.
pub fn to_jsonld(graph: &ProductionGraph, vocab: &Vocabularies) -> Result<Vec<JsonLdDocument>, OntologyError> {
    let v = validate_graph(graph, vocab);
    if !v.is_valid() {
        return Err(OntologyError::Invalid(v.violations));
    }
    graph
        .iter()
        .map(|e| {
            let value = entity_to_value(e, graph, vocab)?;
            let mut text = serde_json::to_string_pretty(&value).expect("json values serialize");
            text.push('\n');
            Ok(JsonLdDocument {
                id: e.id().to_string(),
                tier: e.tier(),
                text,
            })
        })
        .collect()
}

/// Write documents under `root` as `<tier>/<slug>.json`; unchanged files are
/// left alone. Returns the paths written or confirmed.
pub fn write_jsonld_tree(root: &Path, docs: &[JsonLdDocument]) -> Result<Vec<PathBuf>, OntologyError> {
    let mut out = Vec::new();
    for d in docs {
        let path = root.join(d.relative_path());
        write_if_changed(&path, d.text.as_bytes())?;
        out.push(path);
    }
    Ok(out)
}

// --- reading ---------------------------------------------------------------

fn malformed(id: &str, message: impl Into<String>) -> OntologyError {
    OntologyError::Malformed {
        id: id.to_string(),
        message: message.into(),
    }
}

fn str_field<'a>(m: &'a Map<String, Value>, key: &str, id: &str) -> Result<&'a str, OntologyError> {
    m.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(id, format!("missing string field {key:?}")))
}

fn array<'a>(m: &'a Map<String, Value>, key: &str) -> &'a [Value] {
    m.get(key).and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

fn ref_id<'a>(v: &'a Value, id: &str) -> Result<&'a str, OntologyError> {
    v.get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(id, "reference without an id"))
}

fn single_ref(m: &Map<String, Value>, key: &str, id: &str) -> Result<Option<String>, OntologyError> {
    match array(m, key) {
        [] => Ok(None),
        [one] => Ok(Some(ref_id(one, id)?.to_string())),
        _ => Err(malformed(id, format!("{key:?} must hold one reference"))),
    }
}

fn type_iris(m: &Map<String, Value>) -> Vec<&str> {
    array(m, "classified_as")
        .iter()
        .filter_map(|v| v.get("id").and_then(Value::as_str))
        .collect()
}

fn parse_title(m: &Map<String, Value>, vocab: &Vocabularies, id: &str) -> Result<LangString, OntologyError> {
    let name = array(m, "identified_by")
        .first()
        .and_then(Value::as_object)
        .ok_or_else(|| malformed(id, "missing title name"))?;
    let value = str_field(name, "content", id)?.to_string();
    let lang_iri = array(name, "language")
        .first()
        .map(|l| ref_id(l, id))
        .transpose()?
        .ok_or_else(|| malformed(id, "title without language"))?;
    let lang = vocab
        .aat
        .by_iri(lang_iri)
        .and_then(|t| t.code.clone())
        .ok_or_else(|| OntologyError::UnknownTerm(lang_iri.to_string()))?;
    Ok(LangString { value, lang })
}

fn parse_datetime(s: &str, id: &str) -> Result<(NaiveDate, NaiveTime), OntologyError> {
    let s = s.trim_end_matches('Z');
    let (d, t) = s.split_once('T').ok_or_else(|| malformed(id, format!("bad datetime {s:?}")))?;
    let d = NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| malformed(id, format!("{s:?}: {e}")))?;
    let t = NaiveTime::parse_from_str(t, "%H:%M:%S").map_err(|e| malformed(id, format!("{s:?}: {e}")))?;
    Ok((d, t))
}

fn parse_span(m: &Map<String, Value>, id: &str) -> Result<Option<TimeSpan>, OntologyError> {
    let Some(ts) = m.get("timespan").and_then(Value::as_object) else {
        return Ok(None);
    };
    let (start, _) = parse_datetime(str_field(ts, "begin_of_the_begin", id)?, id)?;
    let (end, _) = parse_datetime(str_field(ts, "end_of_the_end", id)?, id)?;
    Ok(Some(TimeSpan { start, end }))
}

/// Split a part's types into (role ids, local ids).
fn part_terms(part: &Map<String, Value>, vocab: &Vocabularies) -> (Vec<String>, Vec<String>) {
    let mut roles = Vec::new();
    let mut local = Vec::new();
    for iri in type_iris(part) {
        if let Some(t) = vocab.roles.by_iri(iri) {
            roles.push(t.id.clone());
        } else if let Some(t) = vocab.local.by_iri(iri) {
            local.push(t.id.clone());
        }
    }
    (roles, local)
}

fn part_agent(part: &Map<String, Value>, id: &str) -> Result<String, OntologyError> {
    single_ref(part, "carried_out_by", id)?.ok_or_else(|| malformed(id, "part without an agent"))
}

fn parse_work(m: &Map<String, Value>, vocab: &Vocabularies, id: &str) -> Result<WorkConcept, OntologyError> {
    let title = parse_title(m, vocab, id)?;
    let empty = Map::new();
    let creation = m.get("created_by").and_then(Value::as_object).unwrap_or(&empty);
    let director = single_ref(creation, "carried_out_by", id)?;
    let year = parse_span(creation, id)?.map(|ts| chrono::Datelike::year(&ts.start));
    let mut influences = Vec::new();
    for part in array(creation, "part") {
        let part = part.as_object().ok_or_else(|| malformed(id, "influence is not an object"))?;
        let (roles, _) = part_terms(part, vocab);
        let target = single_ref(part, "influenced_by", id)?.ok_or_else(|| malformed(id, "influence without target"))?;
        influences.push(Influence {
            target,
            role: roles.into_iter().next(),
        });
    }
    Ok(WorkConcept {
        id: id.to_string(),
        title,
        director,
        year,
        influences,
    })
}

fn parse_production(m: &Map<String, Value>, vocab: &Vocabularies, id: &str) -> Result<Production, OntologyError> {
    let classification = type_iris(m)
        .into_iter()
        .find_map(|iri| vocab.aat.by_iri(iri))
        .map(|t| t.id.clone())
        .ok_or_else(|| malformed(id, "production without a known classification"))?;
    let mut p = Production {
        id: id.to_string(),
        realizes: single_ref(m, "used_specific_object", id)?.ok_or_else(|| malformed(id, "production realizes nothing"))?,
        title: parse_title(m, vocab, id)?,
        venue: single_ref(m, "took_place_at", id)?,
        timespan: parse_span(m, id)?,
        cast_and_crew: Vec::new(),
        funders: Vec::new(),
        classification,
    };
    for part in array(m, "part") {
        let part = part.as_object().ok_or_else(|| malformed(id, "part is not an object"))?;
        let (roles, local) = part_terms(part, vocab);
        let agent = part_agent(part, id)?;
        if local.iter().any(|t| t == FUNDING_TERM) {
            p.funders.push(agent);
        } else if let [role] = roles.as_slice() {
            p.cast_and_crew.push(Participation {
                agent,
                role: role.clone(),
            });
        } else {
            return Err(malformed(id, "part needs exactly one role or a funding type"));
        }
    }
    Ok(p)
}

fn parse_show(m: &Map<String, Value>, vocab: &Vocabularies, id: &str) -> Result<ShowEvent, OntologyError> {
    let mut s = ShowEvent::new(
        id,
        single_ref(m, "part_of", id)?.ok_or_else(|| malformed(id, "show is part of nothing"))?,
        None,
    );
    if let Some(ts) = m.get("timespan").and_then(Value::as_object) {
        let (d, t) = parse_datetime(str_field(ts, "begin_of_the_begin", id)?, id)?;
        s.date = Some(d);
        if ts.contains_key("end_of_the_begin") {
            s.time = Some(t);
        }
    }
    if let Some(dim) = m.get("duration").and_then(Value::as_object) {
        let v = dim
            .get("value")
            .and_then(Value::as_u64)
            .ok_or_else(|| malformed(id, "duration without integer value"))?;
        s.duration_minutes = Some(u32::try_from(v).map_err(|_| malformed(id, "duration out of range"))?);
    }
    for part in array(m, "part") {
        let part = part.as_object().ok_or_else(|| malformed(id, "part is not an object"))?;
        let (roles, local) = part_terms(part, vocab);
        let change = if local.iter().any(|t| t == CAST_ADDED_TERM) {
            CastDelta::Added
        } else if local.iter().any(|t| t == CAST_REMOVED_TERM) {
            CastDelta::Removed
        } else {
            return Err(malformed(id, "cast change without direction"));
        };
        let [role] = roles.as_slice() else {
            return Err(malformed(id, "cast change needs exactly one role"));
        };
        s.cast_changes.push(CastChange {
            agent: part_agent(part, id)?,
            role: role.clone(),
            change,
        });
    }
    s.notes = array(m, "referred_to_by")
        .first()
        .and_then(|v| v.get("content"))
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok(s)
}

fn parse_named(m: &Map<String, Value>, id: &str) -> Result<NamedEntity, OntologyError> {
    let name = array(m, "identified_by")
        .first()
        .and_then(|v| v.get("content"))
        .and_then(Value::as_str)
        .or_else(|| m.get("_label").and_then(Value::as_str))
        .ok_or_else(|| malformed(id, "entity without a name"))?;
    Ok(NamedEntity {
        id: id.to_string(),
        name: name.to_string(),
    })
}

/// Rebuild an entity from its JSON value.
pub fn entity_from_value(v: &Value, vocab: &Vocabularies) -> Result<Entity, OntologyError> {
    let m = v.as_object().ok_or_else(|| malformed("?", "document is not an object"))?;
    let id = str_field(m, "id", "?")?;
    let class = str_field(m, "type", id)?;
    Ok(match class {
        "PropositionalObject" => Entity::Work(parse_work(m, vocab, id)?),
        "Activity" => {
            let show = vocab.require(&vocab.local, SHOW_TERM)?;
            if type_iris(m).contains(&show.iri.as_str()) {
                Entity::Show(parse_show(m, vocab, id)?)
            } else {
                Entity::Production(parse_production(m, vocab, id)?)
            }
        }
        "Person" => Entity::Person(parse_named(m, id)?),
        "Group" => Entity::Group(parse_named(m, id)?),
        "Place" => Entity::Place(parse_named(m, id)?),
        "HumanMadeObject" => Entity::Object(parse_named(m, id)?),
        other => return Err(OntologyError::Unsupported(other.to_string())),
    })
}

/// Parse one document into an entity.
pub fn parse_document(text: &str, vocab: &Vocabularies) -> Result<Entity, OntologyError> {
    let v: Value = serde_json::from_str(text).map_err(|e| OntologyError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    entity_from_value(&v, vocab)
}

/// Rebuild a graph from a set of documents.
pub fn from_jsonld<'a>(
    docs: impl IntoIterator<Item = &'a str>,
    vocab: &Vocabularies,
) -> Result<ProductionGraph, OntologyError> {
    let mut g = ProductionGraph::new();
    for text in docs {
        g.add_entity(parse_document(text, vocab)?)?;
    }
    Ok(g)
}

/// Read every `*.json` under the tier directories of `root`.
pub fn read_jsonld_tree(root: &Path, vocab: &Vocabularies) -> Result<ProductionGraph, OntologyError> {
    let mut texts = Vec::new();
    for tier in Tier::ALL {
        let dir = root.join(tier.dir());
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for f in files {
            texts.push(std::fs::read_to_string(f)?);
        }
    }
    from_jsonld(texts.iter().map(String::as_str), vocab)
}
