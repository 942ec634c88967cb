//! Pairing of transcription trees and corpus-level reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use super::align::{align_lines, AlignStrategy};
use super::metrics::{cer, jaccard, levenshtein_ratio, wer, word_count};
use super::ner::{ner_prf, NerProvider};
use super::EvaluationError;
use crate::transcription::TranscriptionDoc;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPair {
    pub reference: TranscriptionDoc,
    pub hypothesis: TranscriptionDoc,
    /// Number of reference words.
    pub word_count_weight: f64,
}

impl EvalPair {
    pub fn new(reference: TranscriptionDoc, hypothesis: TranscriptionDoc) -> Self {
        let word_count_weight = word_count(&reference.plain_text()) as f64;
        Self {
            reference,
            hypothesis,
            word_count_weight,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileMatch {
    pub pairs: Vec<EvalPair>,
    /// `doc_id/page_index` keys present only in the reference tree.
    pub unmatched_reference: Vec<String>,
    /// Keys present only in the hypothesis tree.
    pub unmatched_hypothesis: Vec<String>,
}

/// Collect `<doc_id>/<page_index>.md` files under `root`.
fn collect_pages(root: &Path) -> Result<BTreeMap<(String, usize), TranscriptionDoc>, EvaluationError> {
    let mut out = BTreeMap::new();
    for doc_entry in std::fs::read_dir(root)? {
        let doc_entry = doc_entry?;
        if !doc_entry.file_type()?.is_dir() {
            continue;
        }
        let doc_id = doc_entry.file_name().to_string_lossy().into_owned();
        if doc_id.starts_with('.') {
            continue;
        }
        for page in std::fs::read_dir(doc_entry.path())? {
            let path = page?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("md") {
                continue;
            }
            let Some(index) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<usize>().ok()) else {
                log::warn!("skipping {}: not a page file", path.display());
                continue;
            };
            let raw = std::fs::read_to_string(&path)?;
            out.insert((doc_id.clone(), index), TranscriptionDoc::parse(doc_id.clone(), index, &raw));
        }
    }
    Ok(out)
}

/// Pair reference and hypothesis pages by `(doc_id, page_index)`.
pub fn match_files(reference_dir: &Path, hypothesis_dir: &Path) -> Result<FileMatch, EvaluationError> {
    let mut refs = collect_pages(reference_dir)?;
    let hyps = collect_pages(hypothesis_dir)?;
    let mut out = FileMatch::default();
    for (key, hyp) in hyps {
        match refs.remove(&key) {
            Some(reference) => out.pairs.push(EvalPair::new(reference, hyp)),
            None => out.unmatched_hypothesis.push(format!("{}/{}", key.0, key.1)),
        }
    }
    out.unmatched_reference = refs.keys().map(|(d, p)| format!("{d}/{p}")).collect();
    out.pairs
        .sort_by(|a, b| (&a.reference.doc_id, a.reference.page_index).cmp(&(&b.reference.doc_id, b.reference.page_index)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LevenshteinRatio,
    Wer,
    Cer,
    JaccardWords,
    JaccardBigrams,
    LinePrecision,
    LineRecall,
    LineLevenshtein,
    NerPrecision,
    NerRecall,
    NerLevenshtein,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::LevenshteinRatio,
        Metric::Wer,
        Metric::Cer,
        Metric::JaccardWords,
        Metric::JaccardBigrams,
        Metric::LinePrecision,
        Metric::LineRecall,
        Metric::LineLevenshtein,
        Metric::NerPrecision,
        Metric::NerRecall,
        Metric::NerLevenshtein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::LevenshteinRatio => "levenshtein_ratio",
            Metric::Wer => "wer",
            Metric::Cer => "cer",
            Metric::JaccardWords => "jaccard_words",
            Metric::JaccardBigrams => "jaccard_bigrams",
            Metric::LinePrecision => "line_precision",
            Metric::LineRecall => "line_recall",
            Metric::LineLevenshtein => "line_levenshtein",
            Metric::NerPrecision => "ner_precision",
            Metric::NerRecall => "ner_recall",
            Metric::NerLevenshtein => "ner_levenshtein",
        }
    }

    pub fn value(self, p: &PairMetrics) -> f64 {
        match self {
            Metric::LevenshteinRatio => p.levenshtein_ratio,
            Metric::Wer => p.wer,
            Metric::Cer => p.cer,
            Metric::JaccardWords => p.jaccard_words,
            Metric::JaccardBigrams => p.jaccard_bigrams,
            Metric::LinePrecision => p.line_precision,
            Metric::LineRecall => p.line_recall,
            Metric::LineLevenshtein => p.line_levenshtein,
            Metric::NerPrecision => p.ner_precision,
            Metric::NerRecall => p.ner_recall,
            Metric::NerLevenshtein => p.ner_levenshtein,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Both,
    WeightedMean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Minimum Levenshtein ratio for two lines to match.
    pub line_threshold: f64,
    /// Minimum Levenshtein ratio for a fuzzy entity match.
    pub ner_threshold: f64,
    pub alignment: AlignStrategy,
    /// Metrics shown in the markdown summary.
    pub metrics: Vec<Metric>,
    pub aggregation: Aggregation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            line_threshold: 0.8,
            ner_threshold: 0.85,
            alignment: AlignStrategy::Greedy,
            metrics: Metric::ALL.to_vec(),
            aggregation: Aggregation::Both,
        }
    }
}

fn round6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e6).round() / 1e6)
}

/// All metrics for one page pair. Jaccard fields hold the similarity index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub doc_id: String,
    pub page_index: usize,
    pub weight: f64,
    #[serde(serialize_with = "round6")]
    pub levenshtein_ratio: f64,
    #[serde(serialize_with = "round6")]
    pub wer: f64,
    #[serde(serialize_with = "round6")]
    pub cer: f64,
    #[serde(serialize_with = "round6")]
    pub jaccard_words: f64,
    #[serde(serialize_with = "round6")]
    pub jaccard_bigrams: f64,
    #[serde(serialize_with = "round6")]
    pub line_precision: f64,
    #[serde(serialize_with = "round6")]
    pub line_recall: f64,
    #[serde(serialize_with = "round6")]
    pub line_levenshtein: f64,
    #[serde(serialize_with = "round6")]
    pub ner_precision: f64,
    #[serde(serialize_with = "round6")]
    pub ner_recall: f64,
    #[serde(serialize_with = "round6")]
    pub ner_levenshtein: f64,
}

/// Score one pair.
pub fn evaluate_pair(pair: &EvalPair, ner: &dyn NerProvider, cfg: &EvalConfig) -> PairMetrics {
    let r = pair.reference.plain_text();
    let h = pair.hypothesis.plain_text();
    let lines = align_lines(&pair.reference, &pair.hypothesis, cfg.line_threshold, cfg.alignment);
    let prf = ner_prf(&ner.extract(&r), &ner.extract(&h), cfg.ner_threshold);
    PairMetrics {
        doc_id: pair.reference.doc_id.clone(),
        page_index: pair.reference.page_index,
        weight: pair.word_count_weight,
        levenshtein_ratio: levenshtein_ratio(&r, &h),
        wer: wer(&r, &h),
        cer: cer(&r, &h),
        jaccard_words: jaccard(&r, &h, 1),
        jaccard_bigrams: jaccard(&r, &h, 2),
        line_precision: lines.precision,
        line_recall: lines.recall,
        line_levenshtein: lines.match_ratio,
        ner_precision: prf.precision,
        ner_recall: prf.recall,
        ner_levenshtein: prf.match_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub weighted_mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Weighted mean; falls back to the plain mean when all weights are zero.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(values.len(), weights.len());
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Median, averaging the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

impl Aggregate {
    pub fn of(values: &[f64], weights: &[f64]) -> Self {
        Self {
            weighted_mean: weighted_mean(values, weights),
            median: median(values),
            std: std_dev(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairs: Vec<PairMetrics>,
    pub aggregates: BTreeMap<Metric, Aggregate>,
    pub unmatched_reference: Vec<String>,
    pub unmatched_hypothesis: Vec<String>,
    pub config: EvalConfig,
}

/// Score every pair (in parallel) and aggregate.
pub fn build_report(pairs: &[EvalPair], ner: &dyn NerProvider, cfg: &EvalConfig) -> Result<EvalReport, EvaluationError> {
    if pairs.is_empty() {
        return Err(EvaluationError::InvalidInput("no pairs to evaluate".into()));
    }
    if !(cfg.line_threshold > 0.0 && cfg.line_threshold <= 1.0 && cfg.ner_threshold > 0.0 && cfg.ner_threshold <= 1.0) {
        return Err(EvaluationError::InvalidInput("thresholds must lie in (0, 1]".into()));
    }
    let metrics: Vec<PairMetrics> = pairs.par_iter().map(|p| evaluate_pair(p, ner, cfg)).collect();
    Ok(aggregate(metrics, cfg.clone()))
}

/// Aggregate precomputed per-pair metrics.
pub fn aggregate(pairs: Vec<PairMetrics>, config: EvalConfig) -> EvalReport {
    let weights: Vec<f64> = pairs.iter().map(|p| p.weight).collect();
    let aggregates = Metric::ALL
        .into_iter()
        .map(|m| {
            let values: Vec<f64> = pairs.iter().map(|p| m.value(p)).collect();
            (m, Aggregate::of(&values, &weights))
        })
        .collect();
    EvalReport {
        pairs,
        aggregates,
        unmatched_reference: Vec::new(),
        unmatched_hypothesis: Vec::new(),
        config,
    }
}

impl EvalReport {
    pub fn with_unmatched(mut self, files: &FileMatch) -> Self {
        self.unmatched_reference = files.unmatched_reference.clone();
        self.unmatched_hypothesis = files.unmatched_hypothesis.clone();
        self
    }

    pub fn aggregate(&self, m: Metric) -> Aggregate {
        self.aggregates[&m]
    }

    /// One JSON record per pair, fields in declaration order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("pair metrics serialize"));
            out.push('\n');
        }
        out
    }

    fn shown(&self, m: Metric) -> bool {
        self.config.metrics.contains(&m)
    }

    /// Markdown summary: a configuration-style table of weighted means, a
    /// median ± standard deviation table (Jaccard shown as distance), then
    /// the per-pair figures.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let words: f64 = self.pairs.iter().map(|p| p.weight).sum();
        let _ = writeln!(s, "# Evaluation report\n");
        let _ = writeln!(s, "Pairs: {}  ", self.pairs.len());
        let _ = writeln!(s, "Reference words: {words}  ");
        let _ = writeln!(
            s,
            "Line threshold: {}; NER threshold: {}; alignment: {}\n",
            self.config.line_threshold,
            self.config.ner_threshold,
            match self.config.alignment {
                AlignStrategy::Greedy => "greedy",
                AlignStrategy::Optimal => "optimal",
            }
        );
        let mean = |m: Metric| self.aggregate(m).weighted_mean;
        if self.config.aggregation != Aggregation::Median {
            let _ = writeln!(s, "## Word-count weighted means\n");
            let cols: [(&str, Vec<Metric>); 5] = [
                ("Lev. full document", vec![Metric::LevenshteinRatio]),
                ("P/R decomp.", vec![Metric::LinePrecision, Metric::LineRecall]),
                ("Lev. decomp.", vec![Metric::LineLevenshtein]),
                ("P/R NER decomp.", vec![Metric::NerPrecision, Metric::NerRecall]),
                ("Lev. NER decomp.", vec![Metric::NerLevenshtein]),
            ];
            let cols: Vec<_> = cols.into_iter().filter(|(_, ms)| ms.iter().all(|m| self.shown(*m))).collect();
            let _ = writeln!(
                s,
                "| Configuration | {} |",
                cols.iter().map(|(h, _)| *h).collect::<Vec<_>>().join(" | ")
            );
            let _ = writeln!(s, "|---|{}", "---|".repeat(cols.len()));
            let cells: Vec<String> = cols
                .iter()
                .map(|(_, ms)| match ms.as_slice() {
                    [a, b] => format!("{:.2}/{:.2}", mean(*a), mean(*b)),
                    [a] => format!("{:.4}", mean(*a)),
                    _ => unreachable!(),
                })
                .collect();
            let _ = writeln!(s, "| this run | {} |\n", cells.join(" | "));
        }
        if self.config.aggregation != Aggregation::WeightedMean {
            let _ = writeln!(s, "## Medians\n");
            let _ = writeln!(s, "| Metric | Score | Standard deviation |");
            let _ = writeln!(s, "|---|---|---|");
            // Jaccard rows report the distance 1 - index
            let rows = [
                ("Jaccard distance (words)", Metric::JaccardWords, true),
                ("Jaccard distance (2-grams)", Metric::JaccardBigrams, true),
                ("CER", Metric::Cer, false),
                ("WER", Metric::Wer, false),
                ("Levenshtein ratio", Metric::LevenshteinRatio, false),
            ];
            for (label, m, distance) in rows {
                if !self.shown(m) {
                    continue;
                }
                let a = self.aggregate(m);
                let score = if distance { 1.0 - a.median } else { a.median };
                let _ = writeln!(s, "| {label} | {score:.2} | {:.2} |", a.std);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "## Pages\n");
        let _ = writeln!(s, "| Page | Words | Lev. | WER | CER | J words | J 2-grams | Line P/R | NER P/R |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "| {}/{} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.2}/{:.2} | {:.2}/{:.2} |",
                p.doc_id,
                p.page_index,
                p.weight,
                p.levenshtein_ratio,
                p.wer,
                p.cer,
                p.jaccard_words,
                p.jaccard_bigrams,
                p.line_precision,
                p.line_recall,
                p.ner_precision,
                p.ner_recall
            );
        }
        if !self.unmatched_reference.is_empty() || !self.unmatched_hypothesis.is_empty() {
            let _ = writeln!(s, "\n## Unmatched files\n");
            for k in &self.unmatched_reference {
                let _ = writeln!(s, "- missing hypothesis: {k}");
            }
            for k in &self.unmatched_hypothesis {
                let _ = writeln!(s, "- missing reference: {k}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::BaselineNer;

    fn pair(r: &str, h: &str) -> EvalPair {
        EvalPair::new(TranscriptionDoc::parse("d", 0, r), TranscriptionDoc::parse("d", 0, h))
    }

    #[test]
    fn empty_pairs_rejected() {
        let r = build_report(&[], &BaselineNer::default(), &EvalConfig::default());
        assert!(matches!(r, Err(EvaluationError::InvalidInput(_))));
    }

    #[test]
    fn identical_pair_is_perfect() {
        let p = pair("# LE ROI LEAR\nde William Shakespeare", "# LE ROI LEAR\nde William Shakespeare");
        let rep = build_report(&[p], &BaselineNer::default(), &EvalConfig::default()).unwrap();
        let m = &rep.pairs[0];
        for metric in Metric::ALL {
            let v = metric.value(m);
            let expect = if matches!(metric, Metric::Wer | Metric::Cer) { 0.0 } else { 1.0 };
            assert_eq!(v, expect, "{}", metric.name());
        }
        assert_eq!(m.weight, 6.0);
    }

    #[test]
    fn weighted_mean_example() {
        assert_eq!(weighted_mean(&[1.0, 0.5], &[100.0, 300.0]), 0.625);
        assert_eq!(weighted_mean(&[1.0, 0.5], &[0.0, 0.0]), 0.75);
    }

    #[test]
    fn median_and_std() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), 2.0);
    }

    fn write_tree(root: &Path, files: &[(&str, &str)]) {
        for (rel, text) in files {
            let p = root.join(rel);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, text).unwrap();
        }
    }

    #[test]
    fn file_matching() {
        let dir = tempfile::tempdir().unwrap();
        let (r, h) = (dir.path().join("ref"), dir.path().join("hyp"));
        write_tree(&r, &[("a/0.md", "x"), ("a/1.md", "y"), ("b/0.md", "z")]);
        write_tree(&h, &[("a/0.md", "x"), ("b/0.md", "z"), ("b/7.md", "w"), ("b/notes.txt", "")]);
        let m = match_files(&r, &h).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.unmatched_reference, ["a/1"]);
        assert_eq!(m.unmatched_hypothesis, ["b/7"]);
        assert!(match_files(&dir.path().join("nope"), &h).is_err());
    }

    #[test]
    fn markdown_shows_jaccard_distance() {
        let p = pair("a b c", "b c d");
        let rep = build_report(&[p], &BaselineNer::default(), &EvalConfig::default()).unwrap();
        let md = rep.to_markdown();
        assert!(md.contains("| Jaccard distance (words) | 0.50 |"));
        assert!(md.contains("| Configuration | Lev. full document | P/R decomp."));
    }
}
