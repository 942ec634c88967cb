//! Pipeline configuration: one TOML file whose relative paths resolve
//! against the file's own directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evaluation::EvalConfig;
use crate::ontology::DEFAULT_BASE_IRI;
use crate::segmentation::{SegmentationParams, DEFAULT_TOLERANCE};
use crate::transcription::{EndpointConfig, StubBehaviour};
use crate::triples::{StepShape, MAX_GRADE};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Source pages, `<doc_id>/<page_index>.{png,tif}`.
    pub images: PathBuf,
    /// Optional externally produced masks, same layout as `images`.
    pub masks: Option<PathBuf>,
    /// `doc_id,year,born_digital` manifest.
    pub documents: PathBuf,
    /// Per-year reference widths; the bundled table when absent.
    pub reference_widths: Option<PathBuf>,
    pub subpages: PathBuf,
    pub transcriptions: PathBuf,
    pub ground_truth: PathBuf,
    pub reports: PathBuf,
    pub graphs: PathBuf,
    /// One draft per `.txt` file.
    pub drafts: PathBuf,
    /// Step trace: `steps.jsonl` plus `truths/<problem>.txt`.
    pub steps: PathBuf,
    /// Journals and service state.
    pub state: PathBuf,
    /// Directory with `standard.txt` and `fallback_prefix.txt`.
    pub prompts: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub judge_prompt: Option<PathBuf>,
    /// Directory with `aat.tsv`, `bnf-roles.tsv` and `local.tsv`.
    pub vocabularies: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            images: "images".into(),
            masks: None,
            documents: "documents.csv".into(),
            reference_widths: None,
            subpages: "out/subpages".into(),
            transcriptions: "out/transcriptions".into(),
            ground_truth: "ground_truth".into(),
            reports: "out/reports".into(),
            graphs: "out/graphs".into(),
            drafts: "drafts".into(),
            steps: "steps".into(),
            state: "out/state".into(),
            prompts: None,
            catalog: None,
            judge_prompt: None,
            vocabularies: None,
            gazetteer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Fraction of the reference width below which a slice is suspect.
    pub tolerance: f64,
    #[serde(flatten)]
    pub params: SegmentationParams,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            params: SegmentationParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceKind {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TranscriptionConfig {
    pub service: ServiceKind,
    pub endpoint: EndpointConfig,
    /// Behaviour of the offline service when `service = "stub"`.
    pub stub: StubBehaviour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructureConfig {
    pub base_iri: String,
    /// Language assumed for plain-text titles.
    pub default_language: String,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            base_iri: DEFAULT_BASE_IRI.into(),
            default_language: "fr".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub service: ServiceKind,
    pub base_url: String,
    pub token_env: Option<String>,
    pub max_grade: u8,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            service: ServiceKind::Stub,
            base_url: String::new(),
            token_env: None,
            max_grade: MAX_GRADE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepsConfig {
    #[serde(flatten)]
    pub shape: StepShape,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub segmentation: SegmentationConfig,
    pub transcription: TranscriptionConfig,
    pub evaluation: EvalConfig,
    pub structure: StructureConfig,
    pub judge: JudgeConfig,
    pub steps: StepsConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Parse TOML text; relative paths are taken relative to `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        for path in [
            &mut p.images,
            &mut p.documents,
            &mut p.subpages,
            &mut p.transcriptions,
            &mut p.ground_truth,
            &mut p.reports,
            &mut p.graphs,
            &mut p.drafts,
            &mut p.steps,
            &mut p.state,
        ] {
            resolve(base, path);
        }
        for path in [
            &mut p.masks,
            &mut p.reference_widths,
            &mut p.prompts,
            &mut p.catalog,
            &mut p.judge_prompt,
            &mut p.vocabularies,
            &mut p.gazetteer,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, path);
        }
        if let Some(dir) = self.transcription.stub.canned_dir.as_mut() {
            resolve(base, dir);
        }
    }

    /// Explicitly configured data files must exist; stage outputs need not.
    fn check(&self) -> Result<(), PipelineError> {
        let p = &self.paths;
        for (name, path) in [
            ("reference_widths", &p.reference_widths),
            ("prompts", &p.prompts),
            ("catalog", &p.catalog),
            ("judge_prompt", &p.judge_prompt),
            ("vocabularies", &p.vocabularies),
            ("gazetteer", &p.gazetteer),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(PipelineError::Config(format!("paths.{name}: {} does not exist", path.display())));
                }
            }
        }
        if !(self.segmentation.tolerance > 0.0 && self.segmentation.tolerance <= 1.0) {
            return Err(PipelineError::Config("segmentation.tolerance must lie in (0, 1]".into()));
        }
        if self.transcription.endpoint.batch_size == 0 {
            return Err(PipelineError::Config("transcription.endpoint.batch_size must be positive".into()));
        }
        if self.judge.max_grade == 0 {
            return Err(PipelineError::Config("judge.max_grade must be positive".into()));
        }
        if self.steps.shape.problems == 0 || self.steps.shape.drafts == 0 {
            return Err(PipelineError::Config("steps.problems and steps.drafts must be positive".into()));
        }
        if self.transcription.service == ServiceKind::Http && self.transcription.endpoint.base_url.as_deref().is_none_or(str::is_empty) {
            return Err(PipelineError::Config("transcription.endpoint.base_url is required for http".into()));
        }
        if self.judge.service == ServiceKind::Http && self.judge.base_url.is_empty() {
            return Err(PipelineError::Config("judge.base_url is required for http".into()));
        }
        Ok(())
    }
}
