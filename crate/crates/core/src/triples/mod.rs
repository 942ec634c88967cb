//! Structured-generation drafts: parsing, the formal reward gate, judge
//! grading, step scoring, and mapping onto the three-tier ontology.

mod catalog;
mod draft;
mod mapping;
mod reward;
mod step;
mod trace;

use thiserror::Error;

pub use catalog::{Binding, CatalogEntry, PropertyCatalog};
pub use draft::{
    data_sections, parse_draft, parse_object, render_data, render_draft, Draft, DraftTriple, ObjectValue,
};
pub use mapping::{
    parse_french_date, triples_to_entities, EntityFragments, MappingOptions, ProvenanceRecord,
};
pub use reward::{
    formal_reward, parse_grade, rubric_grade, soft_reward, HttpJudge, Judge, JudgeError, JudgeTemplate, RewardScore,
    ScriptedJudge, StubJudge, MAX_GRADE,
};
pub use step::{score_step, StepBatch, StepLog, StepShape, StepSummary};
pub use trace::{synthetic_trace, SyntheticTrace};

#[derive(Debug, Error)]
pub enum TriplesError {
    #[error("malformed draft at byte {offset}: {message}")]
    MalformedDraft { offset: usize, message: String },
    #[error("property catalog line {line}: {message}")]
    Catalog { line: usize, message: String },
    #[error("draft refused by the formal gate: {}", .0.join("; "))]
    Refused(Vec<String>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
