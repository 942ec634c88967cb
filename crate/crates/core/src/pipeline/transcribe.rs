//! `transcribe`: send subpages to the transcription service in batches,
//! retry refusals once with the fallback prompt, and resume unfinished jobs
//! from the journal instead of resubmitting them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::imaging::{fit_under_byte_limit, list_page_files, load_page, PageImage};
use crate::transcription::{
    page_output_path, poll_until_done, resume_open_jobs, submit_batch, BatchItem, BatchJob, Block, CostLedger,
    HttpService, ItemResult, JobState, Journal, PromptKind, PromptSet, ServiceError, StubService, SystemClock,
    TranscriptionDoc, TranscriptionError, TranscriptionService,
};

use super::{input_err, Outcome, PipelineConfig, PipelineError, RunOptions, ServiceKind};

fn map_err(e: TranscriptionError) -> PipelineError {
    match e {
        TranscriptionError::Service(ServiceError::Rejected(m)) => PipelineError::Endpoint(format!("rejected: {m}")),
        TranscriptionError::Service(s) => PipelineError::Endpoint(s.to_string()),
        TranscriptionError::Config(m) => PipelineError::Config(m),
        other => PipelineError::Input(other.to_string()),
    }
}

fn service(cfg: &PipelineConfig) -> Result<Box<dyn TranscriptionService>, PipelineError> {
    let t = &cfg.transcription;
    Ok(match t.service {
        ServiceKind::Stub => Box::new(
            StubService::persistent(t.stub.clone(), cfg.paths.state.join("stub_service.json"))
                .map_err(|e| PipelineError::Config(format!("stub state: {e}")))?,
        ),
        ServiceKind::Http => Box::new(HttpService::from_env(t.endpoint.base_url.clone().unwrap_or_default(), t.endpoint.token_env.as_deref())),
    })
}

#[derive(Debug, Default, Serialize)]
struct RunReport {
    resumed_jobs: usize,
    submitted_batches: usize,
    standard: usize,
    fallback: usize,
    refused_by_policy: Vec<String>,
    errors: Vec<String>,
    requests: u64,
    input_tokens: u64,
    output_tokens: u64,
    cost: f64,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    outcome: Outcome,
    report: RunReport,
    /// Pages refused under the standard prompt, awaiting the fallback.
    refused: BTreeSet<BatchItem>,
    costs: CostLedger,
}

impl Run<'_> {
    fn write(&mut self, item: &BatchItem, doc: &TranscriptionDoc) -> Result<(), PipelineError> {
        let path = page_output_path(&self.cfg.paths.transcriptions, &item.doc_id, item.page_index);
        self.outcome.write(&path, doc.render().as_bytes())
    }

    /// Record the results of a finished or timed-out job.
    fn absorb(&mut self, job: &BatchJob) -> Result<(), PipelineError> {
        for item in &job.items {
            match job.result(item) {
                Some(ItemResult::Markdown { text }) => {
                    let doc = TranscriptionDoc::parse(item.doc_id.clone(), item.page_index, text);
                    self.write(item, &doc)?;
                    match job.kind {
                        PromptKind::Standard => self.report.standard += 1,
                        PromptKind::Fallback => self.report.fallback += 1,
                    }
                }
                Some(ItemResult::Refusal { .. }) if job.kind == PromptKind::Standard => {
                    log::info!("{}: refused, queued for fallback", item.custom_id());
                    self.refused.insert(item.clone());
                }
                Some(ItemResult::Refusal { .. }) => {
                    // no third attempt: the page is recorded as untranscribable
                    let doc = TranscriptionDoc::new(item.doc_id.clone(), item.page_index, vec![Block::untranscribable()]);
                    self.write(item, &doc)?;
                    self.outcome.warn(format!("{}: refused under both prompts", item.custom_id()));
                    self.report.refused_by_policy.push(item.custom_id());
                }
                Some(ItemResult::Error { message }) => {
                    self.outcome.warn(format!("{}: {message}", item.custom_id()));
                    self.report.errors.push(format!("{}: {message}", item.custom_id()));
                }
                None => {}
            }
        }
        if job.state == JobState::Failed {
            return Err(PipelineError::Endpoint(format!(
                "job {} timed out with {}/{} items; re-run to resume",
                job.job_id,
                job.results.len(),
                job.items.len()
            )));
        }
        Ok(())
    }
}

/// Transcribe every selected subpage that has no output yet.
pub fn cmd_transcribe(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, PipelineError> {
    let root = &cfg.paths.subpages;
    let files = list_page_files(root).map_err(|e| PipelineError::Input(format!("{}: {e}", root.display())))?;
    let pages: BTreeMap<BatchItem, std::path::PathBuf> = files
        .into_iter()
        .filter(|(d, _)| opts.selected(d))
        .flat_map(|(doc_id, ps)| {
            ps.into_iter().map(move |(page_index, path)| {
                (
                    BatchItem {
                        doc_id: doc_id.clone(),
                        page_index,
                    },
                    path,
                )
            })
        })
        .collect();
    if pages.is_empty() {
        return Err(PipelineError::Input(format!("no subpages selected under {}", root.display())));
    }
    let endpoint = &cfg.transcription.endpoint;
    let prompts = match &cfg.paths.prompts {
        Some(dir) => PromptSet::load(dir).map_err(map_err)?,
        None => PromptSet::builtin(),
    };
    let journal = Journal::open(cfg.paths.state.join("transcribe.journal.jsonl"));
    let open = journal.open_jobs().map_err(map_err)?;
    let in_flight: BTreeSet<BatchItem> = open.iter().flat_map(|j| j.items.iter().cloned()).collect();
    let pending: Vec<&BatchItem> = pages
        .keys()
        .filter(|i| !in_flight.contains(*i))
        .filter(|i| !page_output_path(&cfg.paths.transcriptions, &i.doc_id, i.page_index).exists())
        .collect();

    let mut run = Run {
        cfg,
        outcome: Outcome::default(),
        report: RunReport::default(),
        refused: BTreeSet::new(),
        costs: CostLedger::default(),
    };
    if opts.dry_run {
        run.outcome.note(format!(
            "would resume {} job(s) and submit {} page(s) in {} batch(es)",
            open.len(),
            pending.len(),
            pending.len().div_ceil(endpoint.batch_size)
        ));
        return Ok(run.outcome);
    }
    if open.is_empty() && pending.is_empty() {
        run.outcome.note("all selected subpages are transcribed");
        return Ok(run.outcome);
    }

    let svc = service(cfg)?;
    let clock = SystemClock::new();
    let load = |item: &BatchItem| -> Result<PageImage, PipelineError> {
        let path = pages
            .get(item)
            .cloned()
            .unwrap_or_else(|| root.join(&item.doc_id).join(format!("{}.png", item.page_index)));
        let page = load_page(&path, &item.doc_id, item.page_index).map_err(|e| PipelineError::Input(e.to_string()))?;
        fit_under_byte_limit(&page, endpoint.max_image_bytes).map_err(|e| PipelineError::Input(e.to_string()))
    };

    run.report.resumed_jobs = open.len();
    let resumed = resume_open_jobs(svc.as_ref(), &journal, endpoint, &clock, &mut run.costs).map_err(map_err)?;
    for job in &resumed {
        run.absorb(job)?;
    }

    let mut queue: Vec<(PromptKind, Vec<BatchItem>)> = pending
        .chunks(endpoint.batch_size)
        .map(|c| (PromptKind::Standard, c.iter().map(|i| (*i).clone()).collect()))
        .collect();
    queue.reverse();
    loop {
        let (kind, items) = match queue.pop() {
            Some(next) => next,
            None if !run.refused.is_empty() => {
                let items: Vec<BatchItem> = std::mem::take(&mut run.refused).into_iter().collect();
                for c in items.chunks(endpoint.batch_size).rev() {
                    queue.push((PromptKind::Fallback, c.to_vec()));
                }
                continue;
            }
            None => break,
        };
        let batch = items.iter().map(&load).collect::<Result<Vec<_>, _>>()?;
        let job = submit_batch(svc.as_ref(), &batch, &prompts.build_prompt(kind), kind, endpoint, Some(&journal), &clock)
            .map_err(map_err)?;
        run.report.submitted_batches += 1;
        log::info!("submitted {} ({:?}, {} pages)", job.job_id, kind, items.len());
        let job = poll_until_done(svc.as_ref(), job, endpoint, Some(&journal), &clock, &mut run.costs).map_err(map_err)?;
        run.absorb(&job)?;
    }

    run.report.requests = run.costs.requests;
    run.report.input_tokens = run.costs.input_tokens;
    run.report.output_tokens = run.costs.output_tokens;
    run.report.cost = run.costs.cost(&endpoint.pricing);
    let summary = format!(
        "transcribed {} page(s) with the standard prompt, {} with the fallback; {} refused, {} errors",
        run.report.standard,
        run.report.fallback,
        run.report.refused_by_policy.len(),
        run.report.errors.len()
    );
    let report_path = cfg.paths.reports.join("transcription-run.json");
    let json = serde_json::to_string_pretty(&run.report).expect("report serializes");
    run.outcome.write(&report_path, json.as_bytes())?;
    std::fs::create_dir_all(&cfg.paths.reports).map_err(input_err(cfg.paths.reports.display()))?;
    run.outcome.note(summary);
    Ok(run.outcome)
}
