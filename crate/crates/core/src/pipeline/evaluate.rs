//! `evaluate`: score transcriptions against ground truth.

use std::path::Path;

use crate::evaluation::{build_report, match_files, BaselineNer, Gazetteer};

use super::{Outcome, PipelineConfig, PipelineError, RunOptions};

/// Evaluate `hypothesis_dir` against `reference_dir` (defaults: the
/// configured ground-truth and transcription trees). Poor scores are data,
/// not failures; only a lack of matching pages is an error.
pub fn cmd_evaluate(
    cfg: &PipelineConfig,
    opts: &RunOptions,
    reference_dir: Option<&Path>,
    hypothesis_dir: Option<&Path>,
) -> Result<Outcome, PipelineError> {
    let reference = reference_dir.unwrap_or(&cfg.paths.ground_truth);
    let hypothesis = hypothesis_dir.unwrap_or(&cfg.paths.transcriptions);
    for dir in [reference, hypothesis] {
        if !dir.is_dir() {
            return Err(PipelineError::Input(format!("{} is not a directory", dir.display())));
        }
    }
    let mut files = match_files(reference, hypothesis).map_err(|e| PipelineError::Input(e.to_string()))?;
    let keep = |key: &String| opts.selected(key.split('/').next().unwrap_or(""));
    files.pairs.retain(|p| opts.selected(&p.reference.doc_id));
    files.unmatched_reference.retain(keep);
    files.unmatched_hypothesis.retain(keep);
    if files.pairs.is_empty() {
        return Err(PipelineError::Input(format!(
            "no matching pages between {} and {}",
            reference.display(),
            hypothesis.display()
        )));
    }
    let mut outcome = Outcome::default();
    if opts.dry_run {
        outcome.note(format!("would evaluate {} page pair(s)", files.pairs.len()));
        return Ok(outcome);
    }
    let gazetteer = match &cfg.paths.gazetteer {
        Some(p) => Gazetteer::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
        None => Gazetteer::default(),
    };
    let ner = BaselineNer::new(gazetteer);
    let report = opts
        .pool()?
        .install(|| build_report(&files.pairs, &ner, &cfg.evaluation))
        .map_err(|e| PipelineError::Input(e.to_string()))?
        .with_unmatched(&files);
    let dir = &cfg.paths.reports;
    outcome.write(&dir.join("evaluation.jsonl"), report.to_jsonl().as_bytes())?;
    outcome.write(&dir.join("evaluation.md"), report.to_markdown().as_bytes())?;
    outcome.note(format!(
        "evaluated {} page pair(s); {} reference and {} hypothesis page(s) unmatched",
        report.pairs.len(),
        report.unmatched_reference.len(),
        report.unmatched_hypothesis.len()
    ));
    Ok(outcome)
}
