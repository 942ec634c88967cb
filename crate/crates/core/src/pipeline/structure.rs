//! `structure`: turn drafts into a validated graph and its serializations.

use serde::Serialize;

use crate::ontology::{to_jsonld, to_ntriples, validate_graph, IriMinter, ProductionGraph, Vocabularies};
use crate::triples::{
    formal_reward, parse_draft, triples_to_entities, MappingOptions, PropertyCatalog, ProvenanceRecord,
};

use super::{input_err, Outcome, PipelineConfig, PipelineError, RunOptions};

#[derive(Debug, Serialize)]
struct Rejection<'a> {
    draft: &'a str,
    violations: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    draft: &'a str,
    #[serde(flatten)]
    record: &'a ProvenanceRecord,
}

pub(crate) fn catalog(cfg: &PipelineConfig) -> Result<PropertyCatalog, PipelineError> {
    match &cfg.paths.catalog {
        Some(p) => PropertyCatalog::load(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display()))),
        None => Ok(PropertyCatalog::builtin()),
    }
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter().map(|r| serde_json::to_string(r).expect("row serializes") + "\n").collect()
}

/// Gate, map and link every selected draft; drafts whose entities would make
/// the graph invalid are rejected with the violations they cause.
pub fn cmd_structure(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, PipelineError> {
    let dir = &cfg.paths.drafts;
    let mut drafts = Vec::new();
    for e in std::fs::read_dir(dir).map_err(input_err(dir.display()))? {
        let path = e.map_err(input_err(dir.display()))?.path();
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if path.extension().is_some_and(|x| x == "txt") && opts.selected(&stem) {
            drafts.push((stem, path));
        }
    }
    drafts.sort();
    let mut outcome = Outcome::default();
    if drafts.is_empty() {
        outcome.warn(format!("no drafts selected under {}", dir.display()));
        return Ok(outcome);
    }
    if opts.dry_run {
        outcome.note(format!("would structure {} draft(s)", drafts.len()));
        return Ok(outcome);
    }
    let catalog = catalog(cfg)?;
    let vocab = match &cfg.paths.vocabularies {
        Some(p) => Vocabularies::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
        None => Vocabularies::builtin(),
    };
    let minter = IriMinter::new(cfg.structure.base_iri.clone());
    let mapping = MappingOptions {
        default_language: cfg.structure.default_language.clone(),
    };

    let mut graph = ProductionGraph::new();
    let mut rejected = Vec::new();
    let mut provenance = Vec::new();
    for (name, path) in &drafts {
        let raw = std::fs::read_to_string(path).map_err(input_err(path.display()))?;
        let draft = match parse_draft(&raw) {
            Ok(d) => d,
            Err(e) => {
                rejected.push((name.as_str(), vec![e.to_string()]));
                continue;
            }
        };
        let gate = formal_reward(&draft, &catalog);
        if !gate.formal_pass {
            rejected.push((name.as_str(), gate.violations));
            continue;
        }
        let fragments = match triples_to_entities(&draft, &catalog, &minter, &mapping) {
            Ok(f) => f,
            Err(e) => {
                rejected.push((name.as_str(), vec![e.to_string()]));
                continue;
            }
        };
        let mut trial = graph.clone();
        if let Err(e) = fragments.link_into(&mut trial) {
            rejected.push((name.as_str(), vec![e.to_string()]));
            continue;
        }
        let validation = validate_graph(&trial, &vocab);
        if !validation.is_valid() {
            let v = validation
                .violations
                .iter()
                .map(|v| format!("{} [{}]: {}", v.entity, v.rule, v.message))
                .collect();
            rejected.push((name.as_str(), v));
            continue;
        }
        for w in &fragments.warnings {
            outcome.warn(format!("{name}: {w}"));
        }
        graph = trial;
        provenance.extend(fragments.provenance.into_iter().map(|r| (name.as_str(), r)));
    }

    let out = &cfg.paths.graphs;
    let rows: Vec<Rejection> = rejected
        .iter()
        .map(|(d, v)| Rejection {
            draft: d,
            violations: v.clone(),
        })
        .collect();
    outcome.write(&out.join("rejected.jsonl"), jsonl(&rows).as_bytes())?;
    let rows: Vec<Provenance> = provenance.iter().map(|(d, r)| Provenance { draft: d, record: r }).collect();
    outcome.write(&out.join("provenance.jsonl"), jsonl(&rows).as_bytes())?;
    for (d, v) in &rejected {
        log::info!("rejected {d}: {}", v.join("; "));
    }
    let accepted = drafts.len() - rejected.len();
    if accepted == 0 {
        outcome.warn(format!("all {} draft(s) rejected", drafts.len()));
        return Ok(outcome);
    }
    let docs = to_jsonld(&graph, &vocab).map_err(|e| PipelineError::Input(e.to_string()))?;
    for d in &docs {
        outcome.write(&out.join("jsonld").join(d.relative_path()), d.text.as_bytes())?;
    }
    let nt = to_ntriples(&graph, &vocab).map_err(|e| PipelineError::Input(e.to_string()))?;
    outcome.write(&out.join("graph.nt"), nt.as_bytes())?;
    outcome.note(format!(
        "{accepted} draft(s) accepted into {} entities, {} rejected",
        graph.len(),
        rejected.len()
    ));
    Ok(outcome)
}
