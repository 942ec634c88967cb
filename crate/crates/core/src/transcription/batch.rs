//! Batch submission, polling, refusal handling and the resumable job journal.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::doc::TranscriptionDoc;
use super::prompt::{PromptKind, PromptSet};
use super::service::{BatchItemRequest, ItemStatus, ServiceError, TranscriptionService};
use super::TranscriptionError;
use crate::fsutil::write_if_changed;
use crate::imaging::{encode_png, PageImage};

// --- configuration ---------------------------------------------------------

/// Response shapes treated as content-policy refusals rather than output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefusalPolicy {
    pub status_codes: Vec<u16>,
    /// Regular expressions matched against the response text.
    pub patterns: Vec<String>,
    /// Only responses shorter than this many chars are checked against
    /// `patterns`, so that a transcription quoting an apology is not refused.
    pub max_refusal_chars: usize,
}

impl Default for RefusalPolicy {
    fn default() -> Self {
        Self {
            status_codes: vec![451],
            patterns: vec![
                r"(?i)^\s*I('m| am)? ?(sorry|unable|not able)".into(),
                r"(?i)\b(can(no|')t|won't) (help|assist|transcribe|comply)".into(),
                r"(?i)content polic(y|ies)".into(),
            ],
            max_refusal_chars: 600,
        }
    }
}

impl RefusalPolicy {
    pub fn compile(&self) -> Result<CompiledRefusal, TranscriptionError> {
        let patterns = self
            .patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| TranscriptionError::Config(format!("refusal pattern {p:?}: {e}"))))
            .collect::<Result<_, _>>()?;
        Ok(CompiledRefusal {
            status_codes: self.status_codes.iter().copied().collect(),
            patterns,
            max_chars: self.max_refusal_chars,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompiledRefusal {
    status_codes: BTreeSet<u16>,
    patterns: Vec<Regex>,
    max_chars: usize,
}

impl CompiledRefusal {
    pub fn is_refusal(&self, status_code: u16, text: &str) -> bool {
        if self.status_codes.contains(&status_code) {
            return true;
        }
        text.chars().count() < self.max_chars && self.patterns.iter().any(|p| p.is_match(text))
    }
}

/// Prices per million tokens. Zero unless configured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Pricing {
    pub input_per_mtok: f64,
    pub output_per_mtok: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// `None` selects the in-process stub.
    pub base_url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub batch_size: usize,
    /// Largest accepted encoded image.
    pub max_image_bytes: usize,
    pub poll_interval_secs: f64,
    /// Relative jitter applied to each poll interval, in `[0, 1)`.
    pub poll_jitter: f64,
    pub timeout_secs: f64,
    pub submit_retries: u32,
    pub retry_backoff_secs: f64,
    pub refusal: RefusalPolicy,
    pub pricing: Pricing,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            token_env: None,
            batch_size: 50,
            max_image_bytes: 5 * 1024 * 1024,
            poll_interval_secs: 10.0,
            poll_jitter: 0.1,
            timeout_secs: 2.0 * 3600.0,
            submit_retries: 3,
            retry_backoff_secs: 2.0,
            refusal: RefusalPolicy::default(),
            pricing: Pricing::default(),
        }
    }
}

// --- clocks ----------------------------------------------------------------

/// Time source for polling loops, so tests can run on virtual time.
pub trait Clock: Send + Sync {
    fn elapsed(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Virtual clock: `sleep` advances time instantly.
#[derive(Debug, Default)]
pub struct ManualClock(Mutex<Duration>);

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for ManualClock {
    fn elapsed(&self) -> Duration {
        *self.0.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        *self.0.lock().unwrap() += d;
    }
}

// --- jobs ------------------------------------------------------------------

/// Identifier of one page within a batch: `<doc_id>/<page_index>`.
pub fn custom_id(doc_id: &str, page_index: usize) -> String {
    format!("{doc_id}/{page_index}")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BatchItem {
    pub doc_id: String,
    pub page_index: usize,
}

impl BatchItem {
    pub fn custom_id(&self) -> String {
        custom_id(&self.doc_id, self.page_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum ItemResult {
    Markdown { text: String },
    Refusal { text: String },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchJob {
    pub job_id: String,
    pub kind: PromptKind,
    pub items: Vec<BatchItem>,
    pub state: JobState,
    /// Terminal results keyed by custom id. Items still pending are absent.
    pub results: BTreeMap<String, ItemResult>,
}

impl BatchJob {
    pub fn refusals(&self) -> Vec<&BatchItem> {
        self.items
            .iter()
            .filter(|i| matches!(self.results.get(&i.custom_id()), Some(ItemResult::Refusal { .. })))
            .collect()
    }

    pub fn result(&self, item: &BatchItem) -> Option<&ItemResult> {
        self.results.get(&item.custom_id())
    }
}

/// Token and request counters for auditing corpus cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl CostLedger {
    pub fn record(&mut self, input_tokens: u64, output_tokens: u64) {
        self.requests += 1;
        self.input_tokens += input_tokens;
        self.output_tokens += output_tokens;
    }

    pub fn merge(&mut self, other: &CostLedger) {
        self.requests += other.requests;
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
    }

    pub fn cost(&self, pricing: &Pricing) -> f64 {
        (self.input_tokens as f64 * pricing.input_per_mtok + self.output_tokens as f64 * pricing.output_per_mtok)
            / 1e6
    }
}

// --- journal ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum JournalEvent {
    Submitted {
        job_id: String,
        kind: PromptKind,
        items: Vec<BatchItem>,
    },
    /// The job reached a terminal state and its results were collected.
    Finished { job_id: String, state: JobState },
    /// Polling gave up; the job may still complete and is resumable.
    Timeout { job_id: String },
}

/// Append-only JSONL record of batch jobs. One writer per journal file.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    lock: Mutex<()>,
}

impl Journal {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn err(&self, message: impl ToString) -> TranscriptionError {
        TranscriptionError::Journal {
            path: self.path.display().to_string(),
            message: message.to_string(),
        }
    }

    pub fn append(&self, event: &JournalEvent) -> Result<(), TranscriptionError> {
        let _guard = self.lock.lock().unwrap();
        if let Some(parent) = self.path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        let line = serde_json::to_string(event).map_err(|e| self.err(e))?;
        writeln!(f, "{line}")?;
        f.sync_data()?;
        Ok(())
    }

    pub fn events(&self) -> Result<Vec<JournalEvent>, TranscriptionError> {
        let text = match std::fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        let lines: Vec<&str> = text.lines().collect();
        for (n, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(ev) => out.push(ev),
                // a torn final line from a crash mid-write is ignored
                Err(_) if n + 1 == lines.len() => log::warn!("{}: ignoring torn last line", self.path.display()),
                Err(e) => return Err(self.err(format!("line {}: {e}", n + 1))),
            }
        }
        Ok(out)
    }

    /// Jobs submitted but never finished, in submission order.
    pub fn open_jobs(&self) -> Result<Vec<BatchJob>, TranscriptionError> {
        let mut open: Vec<BatchJob> = Vec::new();
        for ev in self.events()? {
            match ev {
                JournalEvent::Submitted { job_id, kind, items } => open.push(BatchJob {
                    job_id,
                    kind,
                    items,
                    state: JobState::Running,
                    results: BTreeMap::new(),
                }),
                JournalEvent::Finished { job_id, .. } => open.retain(|j| j.job_id != job_id),
                JournalEvent::Timeout { .. } => {}
            }
        }
        Ok(open)
    }
}

// --- operations ------------------------------------------------------------

fn with_retries<T>(
    cfg: &EndpointConfig,
    clock: &dyn Clock,
    mut f: impl FnMut() -> Result<T, ServiceError>,
) -> Result<T, ServiceError> {
    let mut attempt = 0;
    loop {
        match f() {
            Err(e) if e.is_retriable() && attempt < cfg.submit_retries => {
                let wait = cfg.retry_backoff_secs * 2f64.powi(attempt as i32);
                log::warn!("{e}; retrying in {wait:.1}s");
                clock.sleep(Duration::from_secs_f64(wait));
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Submit one batch of conforming pages. Pages must already fit the byte
/// limit (see [`crate::imaging::fit_under_byte_limit`]).
pub fn submit_batch(
    service: &dyn TranscriptionService,
    pages: &[PageImage],
    prompt: &str,
    kind: PromptKind,
    cfg: &EndpointConfig,
    journal: Option<&Journal>,
    clock: &dyn Clock,
) -> Result<BatchJob, TranscriptionError> {
    if pages.is_empty() {
        return Err(TranscriptionError::InvalidInput("empty batch".into()));
    }
    if pages.len() > cfg.batch_size {
        return Err(TranscriptionError::BatchTooLarge {
            len: pages.len(),
            limit: cfg.batch_size,
        });
    }
    let mut requests = Vec::with_capacity(pages.len());
    let mut items = Vec::with_capacity(pages.len());
    for page in pages {
        let item = BatchItem {
            doc_id: page.doc_id.clone(),
            page_index: page.page_index,
        };
        let png = encode_png(page);
        if png.len() > cfg.max_image_bytes {
            return Err(TranscriptionError::PayloadTooLarge {
                custom_id: item.custom_id(),
                bytes: png.len(),
                limit: cfg.max_image_bytes,
            });
        }
        requests.push(BatchItemRequest {
            custom_id: item.custom_id(),
            prompt: prompt.to_string(),
            image_png: png,
        });
        items.push(item);
    }
    let ids: BTreeSet<String> = items.iter().map(BatchItem::custom_id).collect();
    if ids.len() != items.len() {
        return Err(TranscriptionError::InvalidInput("duplicate page in batch".into()));
    }
    let job_id = with_retries(cfg, clock, || service.submit(&requests))?;
    if let Some(j) = journal {
        j.append(&JournalEvent::Submitted {
            job_id: job_id.clone(),
            kind,
            items: items.clone(),
        })?;
    }
    Ok(BatchJob {
        job_id,
        kind,
        items,
        state: JobState::Queued,
        results: BTreeMap::new(),
    })
}

/// Poll `job` until every item is terminal or the timeout expires. On
/// timeout the job is marked failed and the results gathered so far stay.
pub fn poll_until_done(
    service: &dyn TranscriptionService,
    mut job: BatchJob,
    cfg: &EndpointConfig,
    journal: Option<&Journal>,
    clock: &dyn Clock,
    costs: &mut CostLedger,
) -> Result<BatchJob, TranscriptionError> {
    let refusal = cfg.refusal.compile()?;
    let start = clock.elapsed();
    let timeout = Duration::from_secs_f64(cfg.timeout_secs);
    let mut rng = rand::rng();
    job.state = JobState::Running;
    loop {
        match service.status(&job.job_id) {
            Ok(status) => {
                for item in &job.items {
                    let id = item.custom_id();
                    if job.results.contains_key(&id) {
                        continue;
                    }
                    let result = match status.items.get(&id) {
                        None | Some(ItemStatus::Pending) => continue,
                        Some(ItemStatus::Error { message }) => ItemResult::Error {
                            message: message.clone(),
                        },
                        Some(ItemStatus::Done(r)) => {
                            costs.record(r.input_tokens, r.output_tokens);
                            if refusal.is_refusal(r.status_code, &r.text) {
                                ItemResult::Refusal { text: r.text.clone() }
                            } else if r.status_code >= 400 {
                                ItemResult::Error {
                                    message: format!("HTTP {}: {}", r.status_code, r.text),
                                }
                            } else {
                                ItemResult::Markdown { text: r.text.clone() }
                            }
                        }
                    };
                    job.results.insert(id, result);
                }
                if job.results.len() == job.items.len() {
                    job.state = JobState::Done;
                    if let Some(j) = journal {
                        j.append(&JournalEvent::Finished {
                            job_id: job.job_id.clone(),
                            state: JobState::Done,
                        })?;
                    }
                    return Ok(job);
                }
            }
            Err(e) if e.is_retriable() => log::warn!("status of {}: {e}", job.job_id),
            Err(e) => return Err(e.into()),
        }
        if clock.elapsed() - start >= timeout {
            job.state = JobState::Failed;
            if let Some(j) = journal {
                j.append(&JournalEvent::Timeout {
                    job_id: job.job_id.clone(),
                })?;
            }
            log::warn!(
                "job {} timed out with {}/{} items collected",
                job.job_id,
                job.results.len(),
                job.items.len()
            );
            return Ok(job);
        }
        let jitter = if cfg.poll_jitter > 0.0 {
            rng.random_range(-cfg.poll_jitter..cfg.poll_jitter)
        } else {
            0.0
        };
        let wait = (cfg.poll_interval_secs * (1.0 + jitter)).max(0.0);
        clock.sleep(Duration::from_secs_f64(wait));
    }
}

/// Resume polling every unfinished job recorded in `journal`.
pub fn resume_open_jobs(
    service: &dyn TranscriptionService,
    journal: &Journal,
    cfg: &EndpointConfig,
    clock: &dyn Clock,
    costs: &mut CostLedger,
) -> Result<Vec<BatchJob>, TranscriptionError> {
    journal
        .open_jobs()?
        .into_iter()
        .map(|job| {
            log::info!("resuming job {}", job.job_id);
            poll_until_done(service, job, cfg, Some(journal), clock, costs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PageOutcome {
    Standard,
    Fallback,
    /// Refused under both prompts; no transcription exists.
    RefusedByPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageTranscription {
    pub doc: TranscriptionDoc,
    pub outcome: PageOutcome,
    /// Service requests issued for this page (1 or 2).
    pub requests: u32,
}

fn single_page_job(
    service: &dyn TranscriptionService,
    page: &PageImage,
    prompts: &PromptSet,
    kind: PromptKind,
    cfg: &EndpointConfig,
    clock: &dyn Clock,
    costs: &mut CostLedger,
) -> Result<ItemResult, TranscriptionError> {
    let job = submit_batch(service, std::slice::from_ref(page), &prompts.build_prompt(kind), kind, cfg, None, clock)?;
    let job = poll_until_done(service, job, cfg, None, clock, costs)?;
    let item = &job.items[0];
    job.result(item).cloned().ok_or_else(|| {
        ServiceError::Transport(format!("{} still pending at timeout", item.custom_id())).into()
    })
}

/// Transcribe one page: standard prompt first and, only on refusal, exactly
/// one retry with the fallback prompt.
pub fn transcribe_page_with_fallback(
    service: &dyn TranscriptionService,
    page: &PageImage,
    prompts: &PromptSet,
    cfg: &EndpointConfig,
    clock: &dyn Clock,
    costs: &mut CostLedger,
) -> Result<PageTranscription, TranscriptionError> {
    let mut requests = 0;
    for (kind, outcome) in [
        (PromptKind::Standard, PageOutcome::Standard),
        (PromptKind::Fallback, PageOutcome::Fallback),
    ] {
        requests += 1;
        match single_page_job(service, page, prompts, kind, cfg, clock, costs)? {
            ItemResult::Markdown { text } => {
                return Ok(PageTranscription {
                    doc: TranscriptionDoc::parse(page.doc_id.clone(), page.page_index, &text),
                    outcome,
                    requests,
                })
            }
            ItemResult::Refusal { .. } => continue,
            ItemResult::Error { message } => return Err(ServiceError::Rejected(message).into()),
        }
    }
    Ok(PageTranscription {
        doc: TranscriptionDoc::new(page.doc_id.clone(), page.page_index, Vec::new()),
        outcome: PageOutcome::RefusedByPolicy,
        requests,
    })
}

/// `<root>/<doc_id>/<page_index>.md`
pub fn page_output_path(root: &Path, doc_id: &str, page_index: usize) -> PathBuf {
    root.join(doc_id).join(format!("{page_index}.md"))
}

/// Persist a transcription, leaving the file untouched if unchanged.
pub fn write_transcription(root: &Path, doc: &TranscriptionDoc) -> std::io::Result<PathBuf> {
    let path = page_output_path(root, &doc.doc_id, doc.page_index);
    write_if_changed(&path, doc.render().as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcription::{StubBehaviour, StubService};

    fn pages(n: usize) -> Vec<PageImage> {
        (0..n).map(|i| PageImage::filled("doc", i, 16, 16, 255)).collect()
    }

    fn fast_cfg() -> EndpointConfig {
        EndpointConfig {
            poll_interval_secs: 10.0,
            timeout_secs: 120.0,
            ..Default::default()
        }
    }

    #[test]
    fn batch_size_limits() {
        let stub = StubService::new(StubBehaviour::default());
        let clock = ManualClock::new();
        let cfg = fast_cfg();
        let job = submit_batch(&stub, &pages(50), "p", PromptKind::Standard, &cfg, None, &clock).unwrap();
        assert_eq!(job.items.len(), 50);
        assert!(matches!(
            submit_batch(&stub, &[], "p", PromptKind::Standard, &cfg, None, &clock),
            Err(TranscriptionError::InvalidInput(_))
        ));
        assert!(matches!(
            submit_batch(&stub, &pages(51), "p", PromptKind::Standard, &cfg, None, &clock),
            Err(TranscriptionError::BatchTooLarge { len: 51, limit: 50 })
        ));
        assert_eq!(stub.submissions(), 1);
    }

    #[test]
    fn oversized_payload_rejected_before_submission() {
        let stub = StubService::new(StubBehaviour::default());
        let cfg = EndpointConfig {
            max_image_bytes: 10,
            ..fast_cfg()
        };
        let r = submit_batch(&stub, &pages(1), "p", PromptKind::Standard, &cfg, None, &ManualClock::new());
        assert!(matches!(r, Err(TranscriptionError::PayloadTooLarge { .. })));
        assert_eq!(stub.submissions(), 0);
    }

    #[test]
    fn transport_failures_are_retried() {
        let stub = StubService::new(StubBehaviour {
            transport_failures: 2,
            ..Default::default()
        });
        let clock = ManualClock::new();
        let job = submit_batch(&stub, &pages(1), "p", PromptKind::Standard, &fast_cfg(), None, &clock).unwrap();
        assert_eq!(job.state, JobState::Queued);
        // backoff 2 s then 4 s
        assert_eq!(clock.elapsed(), Duration::from_secs(6));
    }

    #[test]
    fn happy_path_and_refusal() {
        let mut b = StubBehaviour {
            polls_to_complete: 3,
            ..Default::default()
        };
        b.refuse_standard.insert("doc/3".into());
        let stub = StubService::new(b);
        let clock = ManualClock::new();
        let cfg = fast_cfg();
        let mut costs = CostLedger::default();
        let job = submit_batch(&stub, &pages(5), "p", PromptKind::Standard, &cfg, None, &clock).unwrap();
        let job = poll_until_done(&stub, job, &cfg, None, &clock, &mut costs).unwrap();
        assert_eq!(job.state, JobState::Done);
        let refused: Vec<_> = job.refusals().iter().map(|i| i.page_index).collect();
        assert_eq!(refused, [3]);
        assert_eq!(costs.requests, 5);
        assert_eq!(stub.status_calls(), 4);
    }

    #[test]
    fn timeout_keeps_partials() {
        let mut b = StubBehaviour::default();
        b.never_complete.insert("doc/1".into());
        let stub = StubService::new(b);
        let clock = ManualClock::new();
        let cfg = EndpointConfig {
            poll_jitter: 0.0,
            ..fast_cfg()
        };
        let job = submit_batch(&stub, &pages(3), "p", PromptKind::Standard, &cfg, None, &clock).unwrap();
        let job = poll_until_done(&stub, job, &cfg, None, &clock, &mut CostLedger::default()).unwrap();
        assert_eq!(job.state, JobState::Failed);
        assert_eq!(job.results.len(), 2);
        assert!(!job.results.contains_key("doc/1"));
        assert_eq!(clock.elapsed(), Duration::from_secs(120));
    }

    #[test]
    fn fallback_request_counts() {
        let page = &pages(1)[0];
        let prompts = PromptSet::builtin();
        let clock = ManualClock::new();
        let cfg = fast_cfg();
        let mut costs = CostLedger::default();

        let stub = StubService::new(StubBehaviour::default());
        let t = transcribe_page_with_fallback(&stub, page, &prompts, &cfg, &clock, &mut costs).unwrap();
        assert_eq!((t.outcome, t.requests, stub.submissions()), (PageOutcome::Standard, 1, 1));

        let mut b = StubBehaviour::default();
        b.refuse_standard.insert("doc/0".into());
        b.responses.insert("doc/0".into(), "# Titre\ncorps".into());
        let stub = StubService::new(b);
        let t = transcribe_page_with_fallback(&stub, page, &prompts, &cfg, &clock, &mut costs).unwrap();
        assert_eq!((t.outcome, t.requests, stub.submissions()), (PageOutcome::Fallback, 2, 2));
        assert_eq!(t.doc.render(), "# Titre\ncorps\n");

        let mut b = StubBehaviour::default();
        b.refuse_always.insert("doc/0".into());
        let stub = StubService::new(b);
        let t = transcribe_page_with_fallback(&stub, page, &prompts, &cfg, &clock, &mut costs).unwrap();
        assert_eq!((t.outcome, t.requests, stub.submissions()), (PageOutcome::RefusedByPolicy, 2, 2));
        assert!(t.doc.blocks.is_empty());
    }

    #[test]
    fn journal_resume_without_resubmission() {
        let dir = tempfile::tempdir().unwrap();
        let journal = Journal::open(dir.path().join("journal.jsonl"));
        let state = dir.path().join("stub.json");
        let behaviour = StubBehaviour {
            polls_to_complete: 5,
            ..Default::default()
        };
        let clock = ManualClock::new();
        let cfg = fast_cfg();
        {
            // crash right after submission
            let stub = StubService::persistent(behaviour.clone(), &state).unwrap();
            submit_batch(&stub, &pages(4), "p", PromptKind::Standard, &cfg, Some(&journal), &clock).unwrap();
        }
        let stub = StubService::persistent(behaviour, &state).unwrap();
        assert_eq!(journal.open_jobs().unwrap().len(), 1);
        let jobs = resume_open_jobs(&stub, &journal, &cfg, &clock, &mut CostLedger::default()).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].state, JobState::Done);
        assert_eq!(stub.submissions(), 1);
        assert!(journal.open_jobs().unwrap().is_empty());
    }

    #[test]
    fn refusal_policy_matching() {
        let p = RefusalPolicy::default().compile().unwrap();
        assert!(p.is_refusal(200, "I'm sorry, but I can't help with that."));
        assert!(p.is_refusal(451, "anything"));
        assert!(!p.is_refusal(200, "# LE ROI LEAR\nde William Shakespeare"));
        let bad = RefusalPolicy {
            patterns: vec!["(".into()],
            ..Default::default()
        };
        assert!(matches!(bad.compile(), Err(TranscriptionError::Config(_))));
    }

    #[test]
    fn cost_from_configured_prices() {
        let mut c = CostLedger::default();
        c.record(1_000_000, 500_000);
        let p = Pricing {
            input_per_mtok: 3.0,
            output_per_mtok: 15.0,
        };
        assert!((c.cost(&p) - 10.5).abs() < 1e-12);
        assert_eq!(c.cost(&Pricing::default()), 0.0);
    }

    #[test]
    fn output_path_layout() {
        let p = page_output_path(Path::new("/out"), "1985_ROI", 3);
        assert_eq!(p, Path::new("/out/1985_ROI/3.md"));
    }
}
