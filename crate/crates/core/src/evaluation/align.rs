//! Line-level matching of hypothesis lines to reference lines.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use super::metrics::{cer, levenshtein_ratio, wer};
use super::ner::mean_match_ratio;
use crate::transcription::TranscriptionDoc;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignStrategy {
    /// Highest-ratio pairs first; deterministic and quadratic.
    #[default]
    Greedy,
    /// Maximum number of matches, then maximum total ratio.
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineMatch {
    pub reference_line: usize,
    pub hypothesis_line: usize,
    pub levenshtein_ratio: f64,
    pub wer: f64,
    pub cer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineAlignment {
    pub matches: Vec<LineMatch>,
    pub precision: f64,
    pub recall: f64,
    /// Mean Levenshtein ratio over matched lines.
    pub match_ratio: f64,
}

/// `matched / total`, with `0 / 0` read as perfect.
pub(crate) fn fraction(matched: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        matched as f64 / total as f64
    }
}

/// Candidate pairs `(ratio, ref, hyp)` at or above `threshold`.
fn candidates(reference: &[&str], hypothesis: &[&str], threshold: f64) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::new();
    for (i, r) in reference.iter().enumerate() {
        for (j, h) in hypothesis.iter().enumerate() {
            let ratio = levenshtein_ratio(r, h);
            if ratio >= threshold {
                out.push((ratio, i, j));
            }
        }
    }
    out
}

/// Greedy best-first matching. Ties break on line content rather than on
/// position, so the result does not depend on line order.
pub fn greedy_pairs(reference: &[&str], hypothesis: &[&str], threshold: f64) -> Vec<(usize, usize)> {
    let mut cands = candidates(reference, hypothesis, threshold);
    cands.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| reference[a.1].cmp(reference[b.1]))
            .then_with(|| hypothesis[a.2].cmp(hypothesis[b.2]))
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut ref_used = vec![false; reference.len()];
    let mut hyp_used = vec![false; hypothesis.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cands {
        if !ref_used[i] && !hyp_used[j] {
            ref_used[i] = true;
            hyp_used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Assignment maximising the match count, then the summed ratio.
pub fn optimal_pairs(reference: &[&str], hypothesis: &[&str], threshold: f64) -> Vec<(usize, usize)> {
    if reference.is_empty() || hypothesis.is_empty() {
        return Vec::new();
    }
    // every admissible edge outweighs any sum of ratio bonuses
    let n = reference.len().max(hypothesis.len()) as i64;
    let big = 1_000_000 * (n + 1);
    let mut weight = vec![vec![0i64; hypothesis.len()]; reference.len()];
    for (ratio, i, j) in candidates(reference, hypothesis, threshold) {
        weight[i][j] = big + (ratio * 1_000_000.0).round() as i64;
    }
    let transpose = reference.len() > hypothesis.len();
    let rows: Vec<Vec<i64>> = if transpose {
        (0..hypothesis.len())
            .map(|j| (0..reference.len()).map(|i| weight[i][j]).collect())
            .collect()
    } else {
        weight.clone()
    };
    let matrix = Matrix::from_rows(rows).expect("rectangular weight matrix");
    let (_, assignment) = kuhn_munkres(&matrix);
    let mut pairs: Vec<(usize, usize)> = assignment
        .into_iter()
        .enumerate()
        .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
        .filter(|&(i, j)| weight[i][j] > 0)
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Match lines of `hypothesis` to lines of `reference` by Levenshtein ratio.
pub fn align_lines(
    reference: &TranscriptionDoc,
    hypothesis: &TranscriptionDoc,
    threshold: f64,
    strategy: AlignStrategy,
) -> LineAlignment {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold must lie in (0, 1]");
    let r = reference.lines();
    let h = hypothesis.lines();
    let pairs = match strategy {
        AlignStrategy::Greedy => greedy_pairs(&r, &h, threshold),
        AlignStrategy::Optimal => optimal_pairs(&r, &h, threshold),
    };
    let matches: Vec<LineMatch> = pairs
        .iter()
        .map(|&(i, j)| LineMatch {
            reference_line: i,
            hypothesis_line: j,
            levenshtein_ratio: levenshtein_ratio(r[i], h[j]),
            wer: wer(r[i], h[j]),
            cer: cer(r[i], h[j]),
        })
        .collect();
    let sum: f64 = matches.iter().map(|m| m.levenshtein_ratio).sum();
    LineAlignment {
        match_ratio: mean_match_ratio(sum, matches.len(), r.is_empty() && h.is_empty()),
        precision: fraction(matches.len(), h.len()),
        recall: fraction(matches.len(), r.len()),
        matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> TranscriptionDoc {
        TranscriptionDoc::parse("d", 0, text)
    }

    const REF: &str = "# LE ROI LEAR\nde William Shakespeare\nmise en scène Jean Vilar\nCour d'honneur";

    #[test]
    fn identical_docs() {
        let a = align_lines(&doc(REF), &doc(REF), 0.8, AlignStrategy::Greedy);
        assert_eq!((a.precision, a.recall), (1.0, 1.0));
        assert!(a.matches.iter().all(|m| m.wer == 0.0 && m.cer == 0.0));
    }

    #[test]
    fn missing_line() {
        let hyp = "# LE ROI LEAR\nde William Shakespeare\nCour d'honneur";
        let a = align_lines(&doc(REF), &doc(hyp), 0.8, AlignStrategy::Greedy);
        assert_eq!((a.precision, a.recall), (1.0, 0.75));
    }

    #[test]
    fn order_insensitive() {
        let hyp = "Cour d'honneur\nmise en scène Jean Vilar\n# LE ROI LEAR\nde William Shakespeare";
        let a = align_lines(&doc(REF), &doc(hyp), 0.8, AlignStrategy::Greedy);
        assert_eq!((a.precision, a.recall), (1.0, 1.0));
    }

    #[test]
    fn optimal_beats_greedy_when_greedy_blocks() {
        // greedy takes the exact pair (r0,h0) and strands r1
        let r = ["abcd", "abxd"];
        let h = ["abcd", "abcx"];
        assert_eq!(greedy_pairs(&r, &h, 0.7), [(0, 0)]);
        assert_eq!(optimal_pairs(&r, &h, 0.7), [(0, 1), (1, 0)]);
        let r = ["aaaa", "aaab"];
        let h = ["aaab"];
        assert_eq!(optimal_pairs(&r, &h, 0.7), [(1, 0)]);
        assert_eq!(optimal_pairs(&h, &r, 0.7), [(0, 1)]);
    }
}
