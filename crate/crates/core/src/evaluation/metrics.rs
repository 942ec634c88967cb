//! String metrics: edit distance, Levenshtein ratio, WER, CER, Jaccard.

use std::collections::BTreeSet;

/// Minimum number of substitutions, deletions and insertions turning `a`
/// into `b`.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    // keep the shorter sequence as the row
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// `1 - d(a, b) / max(|a|, |b|)` over characters; two empty strings give 1.
pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    let (a, b) = (chars(a), chars(b));
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(&a, &b) as f64 / longest as f64
}

/// Split on Unicode whitespace and trim non-alphanumeric characters from
/// both ends of every token; tokens left empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// [`tokenize`] followed by case folding.
pub fn tokenize_folded(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.to_lowercase()).collect()
}

/// Number of reference words, the weight of a pair in corpus means.
pub fn word_count(text: &str) -> usize {
    tokenize(text).len()
}

/// Error rate of `hyp` against `reference`. An empty reference yields the
/// hypothesis length (0 when both are empty).
fn error_rate<T: PartialEq>(reference: &[T], hyp: &[T]) -> f64 {
    if reference.is_empty() {
        return hyp.len() as f64;
    }
    edit_distance(reference, hyp) as f64 / reference.len() as f64
}

/// Word error rate over [`tokenize`] tokens (case-sensitive).
pub fn wer(reference: &str, hypothesis: &str) -> f64 {
    error_rate(&tokenize(reference), &tokenize(hypothesis))
}

/// Whitespace runs collapse to one space and the ends are trimmed.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Character error rate over whitespace-collapsed text.
pub fn cer(reference: &str, hypothesis: &str) -> f64 {
    error_rate(&chars(&collapse_whitespace(reference)), &chars(&collapse_whitespace(hypothesis)))
}

/// Set of case-folded word `n`-grams.
pub fn ngram_set(text: &str, n: usize) -> BTreeSet<Vec<String>> {
    assert!(n >= 1, "n-gram order must be positive");
    let toks = tokenize_folded(text);
    toks.windows(n).map(<[String]>::to_vec).collect()
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets give 1.
pub fn jaccard_sets<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 1.0;
    }
    inter as f64 / union as f64
}

/// Jaccard index over word `n`-gram sets.
pub fn jaccard(reference: &str, hypothesis: &str, n: usize) -> f64 {
    jaccard_sets(&ngram_set(reference, n), &ngram_set(hypothesis, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Memoised recursive definition, independent of the row-based DP.
    fn oracle_distance(a: &[char], b: &[char]) -> usize {
        fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
            if i == a.len() {
                return b.len() - j;
            }
            if j == b.len() {
                return a.len() - i;
            }
            if let Some(&v) = memo.get(&(i, j)) {
                return v;
            }
            let v = if a[i] == b[j] {
                go(a, b, i + 1, j + 1, memo)
            } else {
                1 + go(a, b, i + 1, j + 1, memo)
                    .min(go(a, b, i + 1, j, memo))
                    .min(go(a, b, i, j + 1, memo))
            };
            memo.insert((i, j), v);
            v
        }
        go(a, b, 0, 0, &mut HashMap::new())
    }

    #[test]
    fn identity_ratio() {
        assert_eq!(levenshtein_ratio("abc", "abc"), 1.0);
        assert_eq!(levenshtein_ratio("", ""), 1.0);
    }

    #[test]
    fn kitten_sitting() {
        let k: Vec<char> = "kitten".chars().collect();
        let s: Vec<char> = "sitting".chars().collect();
        let d = oracle_distance(&k, &s);
        assert_eq!(d, 3);
        assert_eq!(levenshtein_ratio("kitten", "sitting"), 1.0 - d as f64 / 7.0);
    }

    #[test]
    fn ratio_counts_chars_not_bytes() {
        assert_eq!(levenshtein_ratio("Rétoré", "Retoré"), 1.0 - 1.0 / 6.0);
    }

    #[test]
    fn wer_examples() {
        assert_eq!(wer("le roi Lear", "le roi Lear"), 0.0);
        assert_eq!(wer("a b c d", "a x c"), 0.5);
        // case is significant for WER
        assert_eq!(wer("Roi", "roi"), 1.0);
        // empty reference convention
        assert_eq!(wer("", "a b"), 2.0);
        assert_eq!(wer("", ""), 0.0);
    }

    #[test]
    fn cer_examples() {
        assert_eq!(cer("abcd", "abcd"), 0.0);
        assert_eq!(cer("abcd", "abxd"), 0.25);
        assert_eq!(cer("a  b\n", "a b"), 0.0);
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard("a b c", "a b c", 1), 1.0);
        assert_eq!(jaccard("a b c", "b c d", 1), 0.5);
        assert_eq!(jaccard("", "", 2), 1.0);
        assert_eq!(jaccard("Le Roi", "le roi", 1), 1.0);
        // bigrams {a b, b c} vs {b c, c d}
        assert_eq!(jaccard("a b c", "b c d", 2), 1.0 / 3.0);
    }

    #[test]
    fn tokenizer_strips_edge_punctuation() {
        assert_eq!(tokenize("« Bonjour, » dit-il — O'Casey."), ["Bonjour", "dit-il", "O'Casey"]);
        assert_eq!(tokenize_folded("ÉTÉ"), ["été"]);
    }
}
