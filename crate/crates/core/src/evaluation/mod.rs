//! Transcription quality metrics at document, line and entity level.

mod align;
mod metrics;
mod ner;
mod report;

use thiserror::Error;

pub use align::{align_lines, greedy_pairs, optimal_pairs, AlignStrategy, LineAlignment, LineMatch};
pub use metrics::{
    cer, collapse_whitespace, edit_distance, jaccard, jaccard_sets, levenshtein_ratio, ngram_set, tokenize,
    tokenize_folded, wer, word_count,
};
pub use ner::{ner_prf, BaselineNer, Entity, EntityKind, EntitySet, Gazetteer, NerProvider, Prf};
pub use report::{
    aggregate, build_report, evaluate_pair, match_files, median, std_dev, weighted_mean, Aggregate, Aggregation,
    EvalConfig, EvalPair, EvalReport, FileMatch, Metric, PairMetrics,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("gazetteer line {line}: {message}")]
    Gazetteer { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
