//! Scoring of one training step: problems × drafts through the formal gate
//! and the judge, summarized into an append-only step log.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::PropertyCatalog;
use super::draft::{parse_draft, Draft};
use super::reward::{formal_reward, soft_reward, Judge, JudgeTemplate, RewardScore};
use super::TriplesError;

/// Problems per step and drafts per problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepShape {
    pub problems: usize,
    pub drafts: usize,
}

impl Default for StepShape {
    fn default() -> Self {
        Self { problems: 4, drafts: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepBatch {
    pub step_index: u64,
    pub problems: Vec<String>,
    /// Raw draft texts, `drafts[p][k]` for problem `p`.
    pub drafts: Vec<Vec<String>>,
    /// Aligned with `drafts` once scored.
    #[serde(default)]
    pub scores: Vec<Vec<RewardScore>>,
}

impl StepBatch {
    fn check(&self, shape: StepShape) -> Result<(), TriplesError> {
        if self.problems.len() != shape.problems || self.drafts.len() != shape.problems {
            return Err(TriplesError::InvalidInput(format!(
                "step {}: expected {} problems, got {} ids and {} draft groups",
                self.step_index,
                shape.problems,
                self.problems.len(),
                self.drafts.len()
            )));
        }
        if let Some((p, g)) = self.drafts.iter().enumerate().find(|(_, g)| g.len() != shape.drafts) {
            return Err(TriplesError::InvalidInput(format!(
                "step {}: problem {} has {} drafts, expected {}",
                self.step_index,
                self.problems[p],
                g.len(),
                shape.drafts
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step_index: u64,
    pub drafts: usize,
    pub pass_rate: f64,
    /// Mean reward over all drafts, formal failures counted as 0.
    pub mean_grade: f64,
    /// Drafts sent to the judge.
    pub judged: usize,
}

impl StepSummary {
    pub fn of(step_index: u64, scores: &[RewardScore]) -> Self {
        let n = scores.len();
        let passed = scores.iter().filter(|s| s.formal_pass).count();
        let total: f64 = scores.iter().map(RewardScore::total).sum();
        let frac = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
        Self {
            step_index,
            drafts: n,
            pass_rate: frac(passed as f64),
            mean_grade: frac(total),
            judged: passed,
        }
    }
}

/// Gate every draft, send only passers to the judge (concurrently on the
/// current rayon pool) and summarize.
pub fn score_step(
    mut batch: StepBatch,
    shape: StepShape,
    catalog: &PropertyCatalog,
    ground_truths: &BTreeMap<String, Draft>,
    judge: &dyn Judge,
    template: &JudgeTemplate,
) -> Result<(StepBatch, StepSummary), TriplesError> {
    batch.check(shape)?;
    let truths = batch
        .problems
        .iter()
        .map(|p| {
            ground_truths
                .get(p)
                .ok_or_else(|| TriplesError::InvalidInput(format!("no ground truth for problem {p}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, &String)> = batch
        .drafts
        .iter()
        .enumerate()
        .flat_map(|(p, g)| g.iter().map(move |d| (p, d)))
        .collect();
    let flat = jobs
        .par_iter()
        .map(|(p, raw)| match parse_draft(raw) {
            Err(e) => Ok(RewardScore::rejected(format!("malformed draft: {e}"))),
            Ok(d) => soft_reward(formal_reward(&d, catalog), &d, truths[*p], judge, template, catalog),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = StepSummary::of(batch.step_index, &flat);
    batch.scores = flat.chunks(shape.drafts).map(<[RewardScore]>::to_vec).collect();
    Ok((batch, summary))
}

/// Append-only JSONL log of step summaries.
#[derive(Debug)]
pub struct StepLog {
    path: PathBuf,
    file: File,
}

impl StepLog {
    pub fn open(path: &Path) -> Result<Self, TriplesError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, summary: &StepSummary) -> Result<(), TriplesError> {
        let line = serde_json::to_string(summary).map_err(|e| TriplesError::InvalidInput(e.to_string()))?;
        writeln!(self.file, "{line}")?;
        self.file.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Vec<StepSummary>, TriplesError> {
        let mut out = Vec::new();
        for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| {
                TriplesError::InvalidInput(format!("{}:{}: {e}", path.display(), n + 1))
            })?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::draft::ObjectValue;
    use super::super::reward::StubJudge;
    use super::*;

    fn truth() -> Draft {
        Draft::new("P", vec![("title", ObjectValue::Text("P".into())), ("director", ObjectValue::Text("D".into()))])
    }

    fn batch(good: usize) -> StepBatch {
        let ok = truth().render();
        let mut bad = truth();
        bad.triples.push(bad.triples[0].clone());
        let bad = bad.render();
        let mut k = 0;
        StepBatch {
            step_index: 3,
            problems: (0..4).map(|i| format!("p{i}")).collect(),
            drafts: (0..4)
                .map(|_| {
                    (0..8)
                        .map(|_| {
                            k += 1;
                            if k <= good { ok.clone() } else { bad.clone() }
                        })
                        .collect()
                })
                .collect(),
            scores: vec![],
        }
    }

    fn truths() -> BTreeMap<String, Draft> {
        (0..4).map(|i| (format!("p{i}"), truth())).collect()
    }

    fn run(b: StepBatch, judge: &StubJudge) -> Result<(StepBatch, StepSummary), TriplesError> {
        score_step(b, StepShape::default(), &PropertyCatalog::builtin(), &truths(), judge, &JudgeTemplate::default())
    }

    #[test]
    fn extremes() {
        let judge = StubJudge::new();
        let (_, s) = run(batch(0), &judge).unwrap();
        assert_eq!((s.mean_grade, s.pass_rate, judge.calls()), (0.0, 0.0, 0));
        let (b, s) = run(batch(32), &judge).unwrap();
        assert_eq!((s.mean_grade, s.pass_rate, judge.calls()), (10.0, 1.0, 32));
        assert_eq!(b.scores.len(), 4);
        assert!(b.scores.iter().all(|g| g.len() == 8));
    }

    #[test]
    fn half_pass_at_eight() {
        struct Eight;
        impl Judge for Eight {
            fn grade(&self, _: &str) -> Result<String, super::super::reward::JudgeError> {
                Ok("8".into())
            }
        }
        let (_, s) = score_step(
            batch(16),
            StepShape::default(),
            &PropertyCatalog::builtin(),
            &truths(),
            &Eight,
            &JudgeTemplate::default(),
        )
        .unwrap();
        // oracle: 16 × 8 / 32
        assert_eq!(s.mean_grade, 16.0 * 8.0 / 32.0);
        assert_eq!(s.pass_rate, 0.5);
    }

    #[test]
    fn incomplete_batches_rejected() {
        let judge = StubJudge::new();
        let mut b = batch(32);
        b.drafts[2].pop();
        assert!(matches!(run(b, &judge), Err(TriplesError::InvalidInput(_))));
        let mut b = batch(32);
        b.problems.pop();
        assert!(matches!(run(b, &judge), Err(TriplesError::InvalidInput(_))));
        let mut b = batch(32);
        b.problems[0] = "unknown".into();
        assert!(matches!(run(b, &judge), Err(TriplesError::InvalidInput(_))));
        assert_eq!(judge.calls(), 0);
    }

    #[test]
    fn malformed_drafts_score_zero() {
        let mut b = batch(32);
        b.drafts[0][0] = "no delimiters".into();
        let (b, s) = run(b, &StubJudge::new()).unwrap();
        assert!(!b.scores[0][0].formal_pass);
        assert_eq!(s.pass_rate, 31.0 / 32.0);
    }

    #[test]
    fn log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log/steps.jsonl");
        let mut log = StepLog::open(&path).unwrap();
        let a = StepSummary::of(0, &[RewardScore::rejected("x")]);
        let b = StepSummary::of(1, &[]);
        log.append(&a).unwrap();
        log.append(&b).unwrap();
        assert_eq!(StepLog::read(&path).unwrap(), vec![a, b]);
    }
}
