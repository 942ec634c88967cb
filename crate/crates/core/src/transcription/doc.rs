//! Markdown transcriptions as a flat list of typed blocks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const UNTRANSCRIBABLE: &str = "[UNABLE TO TRANSCRIBE]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Title,
    Body,
    PageMarker,
    Untranscribable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    /// Title text without the `# ` prefix, the page number for markers,
    /// the raw line for body blocks.
    pub text: String,
}

impl Block {
    pub fn title(text: impl Into<String>) -> Self {
        Self {
            kind: BlockKind::Title,
            text: text.into(),
        }
    }

    pub fn body(text: impl Into<String>) -> Self {
        Self {
            kind: BlockKind::Body,
            text: text.into(),
        }
    }

    pub fn page_marker(n: u32) -> Self {
        Self {
            kind: BlockKind::PageMarker,
            text: n.to_string(),
        }
    }

    pub fn untranscribable() -> Self {
        Self {
            kind: BlockKind::Untranscribable,
            text: String::new(),
        }
    }

    pub fn render(&self) -> String {
        match self.kind {
            BlockKind::Title => format!("# {}", self.text),
            BlockKind::Body => self.text.clone(),
            BlockKind::PageMarker => format!("PAGE {}", self.text),
            BlockKind::Untranscribable => UNTRANSCRIBABLE.to_string(),
        }
    }
}

/// One transcribed page.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TranscriptionDoc {
    pub doc_id: String,
    pub page_index: usize,
    pub blocks: Vec<Block>,
}

fn page_marker(line: &str) -> Option<&str> {
    let n = line.strip_prefix("PAGE ")?;
    (!n.is_empty() && n.len() <= 9 && n.bytes().all(|b| b.is_ascii_digit()) && !n.starts_with('0') || n == "0")
        .then_some(n)
}

/// Total parser: every input yields a document.
pub fn parse_markdown(raw: &str) -> TranscriptionDoc {
    let mut doc = TranscriptionDoc::default();
    if raw.trim() == UNTRANSCRIBABLE {
        doc.blocks.push(Block {
            kind: BlockKind::Untranscribable,
            text: String::new(),
        });
        return doc;
    }
    let trimmed = raw.trim_end();
    if trimmed.is_empty() {
        return doc;
    }
    for line in trimmed.lines() {
        let line = line.trim_end_matches('\r');
        let block = if let Some(title) = line.strip_prefix("# ") {
            Block::title(title)
        } else if let Some(n) = page_marker(line) {
            Block {
                kind: BlockKind::PageMarker,
                text: n.to_string(),
            }
        } else {
            Block::body(line)
        };
        doc.blocks.push(block);
    }
    doc
}

impl TranscriptionDoc {
    pub fn new(doc_id: impl Into<String>, page_index: usize, blocks: Vec<Block>) -> Self {
        Self {
            doc_id: doc_id.into(),
            page_index,
            blocks,
        }
    }

    pub fn parse(doc_id: impl Into<String>, page_index: usize, raw: &str) -> Self {
        let mut d = parse_markdown(raw);
        d.doc_id = doc_id.into();
        d.page_index = page_index;
        d
    }

    /// Markdown text, one block per line, newline-terminated.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            let _ = writeln!(out, "{}", b.render());
        }
        out
    }

    pub fn is_untranscribable(&self) -> bool {
        self.blocks
            .first()
            .is_some_and(|b| b.kind == BlockKind::Untranscribable)
    }

    /// Non-empty text lines (titles without their marker), used for
    /// line-level matching.
    pub fn lines(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .filter(|b| matches!(b.kind, BlockKind::Title | BlockKind::Body))
            .map(|b| b.text.trim())
            .filter(|t| !t.is_empty())
            .collect()
    }

    /// Plain text used for document-level metrics.
    pub fn plain_text(&self) -> String {
        self.lines().join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn title_and_body() {
        let d = parse_markdown("# Coquin de Coq\nde Sean O'Casey");
        assert_eq!(
            d.blocks,
            vec![Block::title("Coquin de Coq"), Block::body("de Sean O'Casey")]
        );
    }

    #[test]
    fn sentinel_is_sole_block() {
        let d = parse_markdown("[UNABLE TO TRANSCRIBE]");
        assert_eq!(d.blocks.len(), 1);
        assert!(d.is_untranscribable());
        assert_eq!(d.render(), "[UNABLE TO TRANSCRIBE]\n");
        // embedded in other text it is just a line
        let mixed = parse_markdown("PAGE 2\n[UNABLE TO TRANSCRIBE]");
        assert_eq!(mixed.blocks[1], Block::body(UNTRANSCRIBABLE));
    }

    #[test]
    fn empty_input() {
        assert!(parse_markdown("").blocks.is_empty());
        assert!(parse_markdown("\n\n  \n").blocks.is_empty());
    }

    #[test]
    fn page_markers() {
        let d = parse_markdown("PAGE 13\nPAGE 013\nPAGE x\nPAGE 0");
        let kinds: Vec<_> = d.blocks.iter().map(|b| b.kind).collect();
        assert_eq!(
            kinds,
            [BlockKind::PageMarker, BlockKind::Body, BlockKind::Body, BlockKind::PageMarker]
        );
        assert_eq!(d.blocks[0].render(), "PAGE 13");
    }

    #[test]
    fn render_reproduces_input() {
        let raw = "PAGE 4\n# Distribution\n\nMise en scène : Guy Rétoré\n#notatitle\n";
        assert_eq!(parse_markdown(raw).render(), raw);
    }

    #[test]
    fn lines_skip_markers_and_blanks() {
        let d = parse_markdown("PAGE 1\n# Titre\n\ncorps");
        assert_eq!(d.lines(), ["Titre", "corps"]);
    }
}
