//! `segment`: split source pages into subpages, skipping documents whose
//! inputs and parameters are unchanged since the last run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::imaging::{encode_png, list_page_files, load_mask_png, load_page, TextMask};
use crate::segmentation::{segment_document, DocumentInfo, DocumentReport, ReferenceWidthTable, SegmentationReport};

use super::{input_err, Outcome, PipelineConfig, PipelineError, RunOptions};

const BUILTIN_REFERENCE_WIDTHS: &str = include_str!("../../data/reference_widths.csv");
const STAMP: &str = "segmentation.json";

#[derive(Debug, Deserialize)]
struct ManifestRow {
    doc_id: String,
    year: i32,
    born_digital: bool,
}

/// Read the `doc_id,year,born_digital` manifest.
pub fn load_documents(path: &Path) -> Result<BTreeMap<String, DocumentInfo>, PipelineError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: ManifestRow = row.map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        out.insert(
            row.doc_id.clone(),
            DocumentInfo {
                doc_id: row.doc_id,
                year: row.year,
                born_digital: row.born_digital,
            },
        );
    }
    Ok(out)
}

pub(crate) fn reference_table(cfg: &PipelineConfig) -> Result<(ReferenceWidthTable, String), PipelineError> {
    let tol = cfg.segmentation.tolerance;
    let text = match &cfg.paths.reference_widths {
        Some(p) => std::fs::read_to_string(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?,
        None => BUILTIN_REFERENCE_WIDTHS.to_string(),
    };
    let table = ReferenceWidthTable::parse(&text, tol).map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok((table, text))
}

#[derive(Debug, Serialize, Deserialize)]
struct Stamp {
    input_digest: String,
    report: DocumentReport,
}

struct DocJob {
    info: DocumentInfo,
    pages: Vec<(usize, PathBuf)>,
    masks: Option<Vec<PathBuf>>,
}

fn digest(job: &DocJob, settings: &str) -> Result<String, PipelineError> {
    let mut h = Sha256::new();
    h.update(settings.as_bytes());
    h.update(serde_json::to_vec(&job.info).expect("info serializes"));
    for (i, p) in &job.pages {
        h.update(i.to_le_bytes());
        h.update(std::fs::read(p).map_err(input_err(p.display()))?);
    }
    for p in job.masks.iter().flatten() {
        h.update(std::fs::read(p).map_err(input_err(p.display()))?);
    }
    Ok(format!("{:x}", h.finalize()))
}

fn read_stamp(dir: &Path) -> Option<Stamp> {
    serde_json::from_str(&std::fs::read_to_string(dir.join(STAMP)).ok()?).ok()
}

fn up_to_date(dir: &Path, stamp: &Stamp, digest: &str) -> bool {
    stamp.input_digest == digest && (0..stamp.report.subpages_out).all(|i| dir.join(format!("{i}.png")).exists())
}

enum DocResult {
    Skipped(DocumentReport),
    Planned(String),
    Done(DocumentReport, Outcome),
}

fn run_document(job: &DocJob, cfg: &PipelineConfig, refs: &ReferenceWidthTable, settings: &str, dry_run: bool) -> Result<DocResult, PipelineError> {
    let doc_id = &job.info.doc_id;
    let out_dir = cfg.paths.subpages.join(doc_id);
    let digest = digest(job, settings)?;
    if let Some(stamp) = read_stamp(&out_dir) {
        if up_to_date(&out_dir, &stamp, &digest) {
            log::debug!("{doc_id}: up to date");
            return Ok(DocResult::Skipped(stamp.report));
        }
    }
    if dry_run {
        return Ok(DocResult::Planned(format!("would segment {doc_id} ({} pages)", job.pages.len())));
    }
    let pages = job
        .pages
        .iter()
        .map(|(i, p)| load_page(p, doc_id, *i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::Input(format!("{doc_id}: {e}")))?;
    let masks: Option<Vec<TextMask>> = match &job.masks {
        Some(paths) => Some(
            paths
                .iter()
                .map(|p| load_mask_png(p))
                .collect::<Result<_, _>>()
                .map_err(|e| PipelineError::Input(format!("{doc_id}: {e}")))?,
        ),
        None => None,
    };
    let (subpages, report) = segment_document(&pages, masks.as_deref(), &job.info, refs, &cfg.segmentation.params)
        .map_err(|e| PipelineError::Input(format!("{doc_id}: {e}")))?;
    let mut outcome = Outcome::default();
    for p in &subpages {
        outcome.write(&out_dir.join(format!("{}.png", p.page_index)), &encode_png(p))?;
    }
    // drop subpages left over from an earlier, longer split
    let mut stale = subpages.len();
    while out_dir.join(format!("{stale}.png")).exists() {
        std::fs::remove_file(out_dir.join(format!("{stale}.png"))).map_err(input_err(doc_id))?;
        stale += 1;
    }
    let stamp = Stamp {
        input_digest: digest,
        report: report.clone(),
    };
    outcome.write(&out_dir.join(STAMP), serde_json::to_string_pretty(&stamp).expect("stamp").as_bytes())?;
    log::info!("{doc_id}: {} pages -> {} subpages ({:?})", report.pages_in, report.subpages_out, report.phase);
    Ok(DocResult::Done(report, outcome))
}

/// Segment every selected document listed under `paths.images`.
pub fn cmd_segment(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, PipelineError> {
    let images = &cfg.paths.images;
    let files = list_page_files(images).map_err(|e| PipelineError::Input(format!("{}: {e}", images.display())))?;
    let files: BTreeMap<_, _> = files.into_iter().filter(|(d, _)| opts.selected(d)).collect();
    if files.is_empty() {
        return Err(PipelineError::Input(format!("no page images selected under {}", images.display())));
    }
    let manifest = load_documents(&cfg.paths.documents)?;
    let (refs, table_text) = reference_table(cfg)?;
    let settings = format!(
        "{}\n{}\n{table_text}",
        cfg.segmentation.tolerance,
        serde_json::to_string(&cfg.segmentation.params).expect("params serialize")
    );

    let mut jobs = Vec::new();
    for (doc_id, pages) in files {
        let info = manifest
            .get(&doc_id)
            .cloned()
            .ok_or_else(|| PipelineError::Input(format!("{doc_id} is missing from {}", cfg.paths.documents.display())))?;
        let masks = match &cfg.paths.masks {
            Some(root) if root.join(&doc_id).is_dir() => {
                let paths: Vec<PathBuf> = pages.iter().map(|(i, _)| root.join(&doc_id).join(format!("{i}.png"))).collect();
                if let Some(missing) = paths.iter().find(|p| !p.exists()) {
                    return Err(PipelineError::Input(format!("mask {} is missing", missing.display())));
                }
                Some(paths)
            }
            _ => None,
        };
        jobs.push(DocJob { info, pages, masks });
    }

    let results: Vec<Result<DocResult, PipelineError>> = opts
        .pool()?
        .install(|| jobs.par_iter().map(|j| run_document(j, cfg, &refs, &settings, opts.dry_run)).collect());

    let mut outcome = Outcome::default();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let (mut skipped, mut done) = (0, 0);
    for r in results {
        match r {
            Ok(DocResult::Skipped(rep)) => {
                skipped += 1;
                reports.push(rep);
            }
            Ok(DocResult::Planned(msg)) => outcome.note(msg),
            Ok(DocResult::Done(rep, o)) => {
                done += 1;
                outcome.written.extend(o.written);
                outcome.warnings.extend(rep.warnings.iter().map(|w| format!("{}: {w}", rep.doc_id)));
                reports.push(rep);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        return Err(PipelineError::Input(failures.join("; ")));
    }
    outcome.note(format!("segmented {done} document(s), {skipped} up to date"));
    if opts.dry_run {
        return Ok(outcome);
    }
    // the corpus report covers every segmented document on disk, selected or not
    let mut all: BTreeMap<String, DocumentReport> = BTreeMap::new();
    if let Ok(entries) = std::fs::read_dir(&cfg.paths.subpages) {
        for e in entries.flatten() {
            if let Some(stamp) = read_stamp(&e.path()) {
                all.insert(stamp.report.doc_id.clone(), stamp.report);
            }
        }
    }
    for r in reports {
        all.insert(r.doc_id.clone(), r);
    }
    let report = SegmentationReport {
        documents: all.into_values().collect(),
    };
    let dir = &cfg.paths.reports;
    outcome.write(&dir.join("segmentation.jsonl"), report.to_jsonl().as_bytes())?;
    outcome.write(&dir.join("segmentation.md"), report.to_markdown().as_bytes())?;
    Ok(outcome)
}
