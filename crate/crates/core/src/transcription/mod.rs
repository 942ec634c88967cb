//! Batch transcription through an external vision-language service.

mod batch;
mod doc;
mod prompt;
mod service;

use thiserror::Error;

pub use batch::{
    custom_id, page_output_path, poll_until_done, resume_open_jobs, submit_batch, transcribe_page_with_fallback,
    write_transcription, BatchItem, BatchJob, Clock, CostLedger, EndpointConfig, ItemResult, JobState, Journal,
    JournalEvent, ManualClock, PageOutcome, PageTranscription, Pricing, RefusalPolicy, SystemClock,
};
pub use doc::{parse_markdown, Block, BlockKind, TranscriptionDoc, UNTRANSCRIBABLE};
pub use prompt::{PromptKind, PromptSet, PromptTemplate};
pub use service::{
    encode_image_b64, BatchItemRequest, HttpService, ItemResponse, ItemStatus, JobStatus, ServiceError, StubBehaviour, StubService,
    TranscriptionService,
};

use crate::imaging::ImagingError;

#[derive(Debug, Error)]
pub enum TranscriptionError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("batch of {len} items exceeds the limit of {limit}; split it first")]
    BatchTooLarge { len: usize, limit: usize },
    #[error("{custom_id}: payload of {bytes} bytes exceeds the limit of {limit}")]
    PayloadTooLarge { custom_id: String, bytes: usize, limit: usize },
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("journal {path}: {message}")]
    Journal { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
