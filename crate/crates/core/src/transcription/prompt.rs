//! Transcription prompts: the standard extraction prompt and the prefixed
//! variant used only after a refusal.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TranscriptionError;

pub const STANDARD_FILE: &str = "standard.txt";
pub const FALLBACK_PREFIX_FILE: &str = "fallback_prefix.txt";

const BUILTIN_STANDARD: &str = include_str!("../../data/prompts/standard.txt");
const BUILTIN_FALLBACK_PREFIX: &str = include_str!("../../data/prompts/fallback_prefix.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    Standard,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
    pub kind: PromptKind,
}

impl PromptTemplate {
    /// Substitute `{{key}}` slots; unknown slots are left in place.
    pub fn render(&self, vars: &BTreeMap<String, String>) -> String {
        let mut out = self.body.clone();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        out
    }
}

/// The pair of prompt texts a transcription run needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    standard: String,
    fallback_prefix: String,
}

impl PromptSet {
    /// Prompts bundled with the crate.
    pub fn builtin() -> Self {
        Self {
            standard: BUILTIN_STANDARD.to_string(),
            fallback_prefix: BUILTIN_FALLBACK_PREFIX.to_string(),
        }
    }

    pub fn new(standard: impl Into<String>, fallback_prefix: impl Into<String>) -> Self {
        Self {
            standard: standard.into(),
            fallback_prefix: fallback_prefix.into(),
        }
    }

    /// Load `standard.txt` and `fallback_prefix.txt` from `dir`.
    pub fn load(dir: &Path) -> Result<Self, TranscriptionError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| {
                TranscriptionError::Config(format!("prompt template {}: {e}", path.display()))
            })
        };
        Ok(Self {
            standard: read(STANDARD_FILE)?,
            fallback_prefix: read(FALLBACK_PREFIX_FILE)?,
        })
    }

    pub fn template(&self, kind: PromptKind) -> PromptTemplate {
        let (name, body) = match kind {
            PromptKind::Standard => ("standard", self.standard.trim_end().to_string()),
            PromptKind::Fallback => (
                "fallback",
                format!("{}\n\n{}", self.fallback_prefix.trim_end(), self.standard.trim_end()),
            ),
        };
        PromptTemplate {
            name: name.to_string(),
            body,
            kind,
        }
    }

    pub fn build_prompt(&self, kind: PromptKind) -> String {
        self.template(kind).render(&BTreeMap::new())
    }

    /// First line of the fallback prefix, used to recognise fallback requests.
    pub fn fallback_marker(&self) -> &str {
        self.fallback_prefix.lines().next().unwrap_or("").trim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_prompt_wording() {
        let p = PromptSet::builtin().build_prompt(PromptKind::Standard);
        assert!(p.starts_with("This image corresponds to a page in a theater program."));
        assert!(p.contains("DO NOT summarize, paraphrase, or infer missing text"));
        assert!(p.contains("[UNABLE TO\n TRANSCRIBE]"));
        assert!(p.contains("(example: PAGE 13)"));
    }

    #[test]
    fn fallback_is_prefixed() {
        let set = PromptSet::builtin();
        let std = set.build_prompt(PromptKind::Standard);
        let fb = set.build_prompt(PromptKind::Fallback);
        assert!(fb.starts_with(set.fallback_marker()));
        assert!(fb.ends_with(&std));
        assert!(fb.len() > std.len());
    }

    #[test]
    fn missing_template_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            PromptSet::load(dir.path()),
            Err(TranscriptionError::Config(_))
        ));
    }

    #[test]
    fn slot_substitution() {
        let t = PromptTemplate {
            name: "t".into(),
            body: "page {{n}} of {{doc}}".into(),
            kind: PromptKind::Standard,
        };
        let vars = BTreeMap::from([("n".to_string(), "3".to_string())]);
        assert_eq!(t.render(&vars), "page 3 of {{doc}}");
    }
}
