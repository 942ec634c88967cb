//! End-to-end orchestration: segment → transcribe → evaluate → structure,
//! plus replay of training-step traces. Each command is idempotent: a re-run
//! over unchanged inputs writes nothing.

mod config;
mod evaluate;
mod segment;
mod steps;
mod structure;
mod transcribe;

use std::path::Path;

use thiserror::Error;

pub use config::{
    JudgeConfig, Paths, PipelineConfig, SegmentationConfig, ServiceKind, StepsConfig, StructureConfig,
    TranscriptionConfig,
};
pub use evaluate::cmd_evaluate;
pub use segment::{cmd_segment, load_documents};
pub use steps::cmd_score_steps;
pub use structure::cmd_structure;
pub use transcribe::cmd_transcribe;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    /// The remote service failed; re-running resumes where this run stopped.
    #[error("endpoint failure: {0}")]
    Endpoint(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Input(_) => 3,
            PipelineError::Endpoint(_) => 4,
        }
    }
}

pub(crate) fn input_err(context: impl std::fmt::Display) -> impl FnOnce(std::io::Error) -> PipelineError {
    move |e| PipelineError::Input(format!("{context}: {e}"))
}

/// Options shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Glob over document ids (or draft names for `structure`).
    pub select: Option<glob::Pattern>,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Report what would happen without writing or calling services.
    pub dry_run: bool,
}

impl RunOptions {
    pub fn selected(&self, id: &str) -> bool {
        self.select.as_ref().is_none_or(|p| p.matches(id))
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))
    }
}

/// What a successful command did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Human-readable progress lines.
    pub notes: Vec<String>,
    /// Non-fatal problems; any warning makes the exit code 1.
    pub warnings: Vec<String>,
    /// Files created or changed.
    pub written: Vec<std::path::PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            1
        }
    }

    pub(crate) fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::debug!("{msg}");
        self.notes.push(msg);
    }

    pub(crate) fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::debug!("{msg}");
        self.warnings.push(msg);
    }

    /// Write through [`crate::fsutil::write_if_changed`], remembering changed files.
    pub(crate) fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
        if crate::fsutil::write_if_changed(path, bytes).map_err(input_err(path.display()))? {
            self.written.push(path.to_path_buf());
        }
        Ok(())
    }
}
