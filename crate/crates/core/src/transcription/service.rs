//! Wire contract for batch transcription services, with an in-process stub
//! and a JSON-over-HTTP adapter.
//!
//! A service accepts a batch of `(custom_id, prompt, image)` items and hands
//! back a job id; status queries return every item that has reached a
//! terminal state.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Mutex;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchItemRequest {
    pub custom_id: String,
    pub prompt: String,
    #[serde(with = "b64")]
    pub image_png: Vec<u8>,
}

mod b64 {
    use base64::Engine as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(s)
            .map_err(serde::de::Error::custom)
    }
}

/// A completed response for one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemResponse {
    pub status_code: u16,
    pub text: String,
    #[serde(default)]
    pub input_tokens: u64,
    #[serde(default)]
    pub output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ItemStatus {
    Pending,
    Done(ItemResponse),
    Error { message: String },
}

impl ItemStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, ItemStatus::Pending)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobStatus {
    pub job_id: String,
    pub items: BTreeMap<String, ItemStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    /// Network or server trouble; the call may be retried.
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("unknown job {0}")]
    UnknownJob(String),
}

impl ServiceError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, ServiceError::Transport(_))
    }
}

pub trait TranscriptionService: Send + Sync {
    fn submit(&self, items: &[BatchItemRequest]) -> Result<String, ServiceError>;
    fn status(&self, job_id: &str) -> Result<JobStatus, ServiceError>;
}

// --- stub ------------------------------------------------------------------

/// Behaviour knobs for [`StubService`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubBehaviour {
    /// Canned response text per custom id.
    pub responses: BTreeMap<String, String>,
    /// Directory holding `<custom_id>.md` responses, consulted after `responses`.
    pub canned_dir: Option<PathBuf>,
    /// Response for items without a canned text; `None` answers `PAGE <n>`.
    pub default_response: Option<String>,
    /// Items refused when sent with the standard prompt.
    pub refuse_standard: BTreeSet<String>,
    /// Items refused whatever the prompt.
    pub refuse_always: BTreeSet<String>,
    /// Items that come back as per-item errors.
    pub fail_items: BTreeSet<String>,
    pub refusal_text: String,
    pub refusal_status: u16,
    /// Prompts containing this text are treated as fallback prompts.
    pub fallback_marker: String,
    /// Status queries a job needs before its items complete.
    pub polls_to_complete: u32,
    /// Items in this set never leave the pending state.
    pub never_complete: BTreeSet<String>,
    /// Number of initial submit calls that fail with a transport error.
    pub transport_failures: u32,
    pub tokens_per_item: (u64, u64),
}

impl Default for StubBehaviour {
    fn default() -> Self {
        Self {
            responses: BTreeMap::new(),
            canned_dir: None,
            default_response: None,
            refuse_standard: BTreeSet::new(),
            refuse_always: BTreeSet::new(),
            fail_items: BTreeSet::new(),
            refusal_text: "I'm sorry, but I can't help with transcribing this content.".into(),
            refusal_status: 200,
            fallback_marker: super::PromptSet::builtin().fallback_marker().to_string(),
            polls_to_complete: 0,
            never_complete: BTreeSet::new(),
            transport_failures: 0,
            tokens_per_item: (1500, 400),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct StubJob {
    /// `(custom_id, sent with fallback prompt)`
    items: Vec<(String, bool)>,
    polls: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct StubState {
    jobs: BTreeMap<String, StubJob>,
    submissions: u64,
    submitted_items: u64,
    submit_calls: u64,
    status_calls: u64,
    next_id: u64,
}

/// Deterministic in-process service. With a state file it survives process
/// restarts, which lets crash/resume behaviour be exercised end to end.
#[derive(Debug)]
pub struct StubService {
    behaviour: StubBehaviour,
    state: Mutex<StubState>,
    state_file: Option<PathBuf>,
}

impl StubService {
    pub fn new(behaviour: StubBehaviour) -> Self {
        Self {
            behaviour,
            state: Mutex::new(StubState::default()),
            state_file: None,
        }
    }

    /// Load (or start) persistent state at `path`.
    pub fn persistent(behaviour: StubBehaviour, path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        let state = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => StubState::default(),
            Err(e) => return Err(e),
        };
        Ok(Self {
            behaviour,
            state: Mutex::new(state),
            state_file: Some(path),
        })
    }

    /// Accepted batch submissions so far.
    pub fn submissions(&self) -> u64 {
        self.state.lock().unwrap().submissions
    }

    /// Items across all accepted submissions.
    pub fn submitted_items(&self) -> u64 {
        self.state.lock().unwrap().submitted_items
    }

    /// Every submitted `(custom_id, sent with fallback prompt)`, in job order.
    pub fn submitted_ids(&self) -> Vec<(String, bool)> {
        self.state.lock().unwrap().jobs.values().flat_map(|j| j.items.clone()).collect()
    }

    pub fn status_calls(&self) -> u64 {
        self.state.lock().unwrap().status_calls
    }

    fn persist(&self, state: &StubState) {
        if let Some(path) = &self.state_file {
            if let Some(parent) = path.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            let text = serde_json::to_string_pretty(state).expect("stub state serializes");
            if let Err(e) = std::fs::write(path, text) {
                log::warn!("stub state {}: {e}", path.display());
            }
        }
    }

    fn response_for(&self, custom_id: &str, fallback: bool) -> ItemStatus {
        let b = &self.behaviour;
        if b.fail_items.contains(custom_id) {
            return ItemStatus::Error {
                message: format!("stub failure for {custom_id}"),
            };
        }
        let (input_tokens, output_tokens) = b.tokens_per_item;
        let refused =
            b.refuse_always.contains(custom_id) || (!fallback && b.refuse_standard.contains(custom_id));
        if refused {
            return ItemStatus::Done(ItemResponse {
                status_code: b.refusal_status,
                text: b.refusal_text.clone(),
                input_tokens,
                output_tokens: 20,
            });
        }
        let text = b
            .responses
            .get(custom_id)
            .cloned()
            .or_else(|| {
                let dir = b.canned_dir.as_ref()?;
                std::fs::read_to_string(dir.join(format!("{custom_id}.md"))).ok()
            })
            .or_else(|| b.default_response.clone())
            .unwrap_or_else(|| {
                let n = custom_id.rsplit('/').next().unwrap_or("0");
                format!("PAGE {}", n.parse::<u64>().map_or(1, |n| n + 1))
            });
        ItemStatus::Done(ItemResponse {
            status_code: 200,
            text,
            input_tokens,
            output_tokens,
        })
    }
}

impl TranscriptionService for StubService {
    fn submit(&self, items: &[BatchItemRequest]) -> Result<String, ServiceError> {
        let mut st = self.state.lock().unwrap();
        st.submit_calls += 1;
        if st.submit_calls <= self.behaviour.transport_failures as u64 {
            self.persist(&st);
            return Err(ServiceError::Transport("stub: connection reset".into()));
        }
        if items.is_empty() {
            return Err(ServiceError::Rejected("empty batch".into()));
        }
        st.next_id += 1;
        let job_id = format!("stub-job-{:04}", st.next_id);
        let job = StubJob {
            items: items
                .iter()
                .map(|i| (i.custom_id.clone(), i.prompt.contains(&self.behaviour.fallback_marker)))
                .collect(),
            polls: 0,
        };
        st.jobs.insert(job_id.clone(), job);
        st.submissions += 1;
        st.submitted_items += items.len() as u64;
        self.persist(&st);
        Ok(job_id)
    }

    fn status(&self, job_id: &str) -> Result<JobStatus, ServiceError> {
        let mut st = self.state.lock().unwrap();
        st.status_calls += 1;
        let job = st
            .jobs
            .get_mut(job_id)
            .ok_or_else(|| ServiceError::UnknownJob(job_id.to_string()))?;
        job.polls += 1;
        let ready = job.polls > self.behaviour.polls_to_complete;
        let items = job
            .items
            .iter()
            .map(|(id, fallback)| {
                let status = if !ready || self.behaviour.never_complete.contains(id) {
                    ItemStatus::Pending
                } else {
                    self.response_for(id, *fallback)
                };
                (id.clone(), status)
            })
            .collect();
        let out = JobStatus {
            job_id: job_id.to_string(),
            items,
        };
        self.persist(&st);
        Ok(out)
    }
}

// --- HTTP adapter ----------------------------------------------------------

/// JSON over HTTP:
///
/// * `POST {base}/batches` with `{"items": [BatchItemRequest]}` returns `{"job_id": ".."}`
/// * `GET {base}/batches/{job_id}` returns a [`JobStatus`]
#[derive(Debug, Clone)]
pub struct HttpService {
    base_url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct SubmitBody<'a> {
    items: &'a [BatchItemRequest],
}

#[derive(Deserialize)]
struct SubmitReply {
    job_id: String,
}

impl HttpService {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token,
            agent: ureq::AgentBuilder::new()
                .timeout(std::time::Duration::from_secs(120))
                .build(),
        }
    }

    /// Read the bearer token from the named environment variable, if set.
    pub fn from_env(base_url: impl Into<String>, token_env: Option<&str>) -> Self {
        let token = token_env.and_then(|v| std::env::var(v).ok());
        Self::new(base_url, token)
    }

    fn authorize(&self, req: ureq::Request) -> ureq::Request {
        match &self.token {
            Some(t) => req.set("Authorization", &format!("Bearer {t}")),
            None => req,
        }
    }
}

fn map_ureq(e: ureq::Error) -> ServiceError {
    match e {
        ureq::Error::Status(404, resp) => {
            ServiceError::UnknownJob(resp.get_url().to_string())
        }
        ureq::Error::Status(code, resp) if code >= 500 || code == 429 => {
            ServiceError::Transport(format!("HTTP {code} from {}", resp.get_url()))
        }
        ureq::Error::Status(code, resp) => {
            let url = resp.get_url().to_string();
            let body = resp.into_string().unwrap_or_default();
            ServiceError::Rejected(format!("HTTP {code} from {url}: {body}"))
        }
        ureq::Error::Transport(t) => ServiceError::Transport(t.to_string()),
    }
}

impl TranscriptionService for HttpService {
    fn submit(&self, items: &[BatchItemRequest]) -> Result<String, ServiceError> {
        let req = self.authorize(self.agent.post(&format!("{}/batches", self.base_url)));
        let reply: SubmitReply = req
            .send_json(SubmitBody { items })
            .map_err(map_ureq)?
            .into_json()
            .map_err(|e| ServiceError::Transport(format!("bad submit reply: {e}")))?;
        Ok(reply.job_id)
    }

    fn status(&self, job_id: &str) -> Result<JobStatus, ServiceError> {
        let req = self.authorize(self.agent.get(&format!("{}/batches/{job_id}", self.base_url)));
        req.call()
            .map_err(map_ureq)?
            .into_json()
            .map_err(|e| ServiceError::Transport(format!("bad status reply: {e}")))
    }
}

/// Encode bytes the way the HTTP payload does; handy for adapters and tests.
pub fn encode_image_b64(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}
