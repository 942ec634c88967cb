//! Formal gate and judge-based grading of drafts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::catalog::PropertyCatalog;
use super::draft::{data_sections, render_data, Draft, DraftTriple};
use super::TriplesError;

/// Top of the grade scale unless configured otherwise.
pub const MAX_GRADE: u8 = 10;

const BUILTIN_JUDGE_PROMPT: &str = include_str!("../../data/judge_prompt.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardScore {
    pub formal_pass: bool,
    /// Judge grade in `0..=max_grade`; only ever set on formal passes.
    pub grade: Option<u8>,
    pub violations: Vec<String>,
}

impl RewardScore {
    /// Scalar reward: 0 on formal failure or missing grade.
    pub fn total(&self) -> f64 {
        match (self.formal_pass, self.grade) {
            (true, Some(g)) => g as f64,
            _ => 0.0,
        }
    }

    pub fn rejected(violation: impl Into<String>) -> Self {
        Self {
            formal_pass: false,
            grade: None,
            violations: vec![violation.into()],
        }
    }
}

/// Every property must come from the catalog and appear at most once.
/// Violations are reported once per offending label, sorted.
pub fn formal_reward(draft: &Draft, catalog: &PropertyCatalog) -> RewardScore {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &draft.triples {
        *counts.entry(t.property.trim()).or_default() += 1;
    }
    let mut violations = BTreeSet::new();
    for (label, n) in counts {
        if !catalog.contains(label) {
            violations.insert(format!("unknown property: {label}"));
        }
        if n > 1 {
            violations.insert(format!("duplicate property: {label}"));
        }
    }
    RewardScore {
        formal_pass: violations.is_empty(),
        grade: None,
        violations: violations.into_iter().collect(),
    }
}

#[derive(Debug, Error)]
pub enum JudgeError {
    /// Network or server trouble; the call may be retried.
    #[error("judge transport failure: {0}")]
    Transport(String),
    #[error("judge rejected the request: {0}")]
    Rejected(String),
}

/// Judge wire contract: a rendered prompt in, raw reply text out.
pub trait Judge: Send + Sync {
    fn grade(&self, prompt: &str) -> Result<String, JudgeError>;
}

/// Comparison prompt with `{{candidate}}`, `{{reference}}`, `{{catalog}}`
/// and `{{max_grade}}` slots, plus the grade scale it announces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeTemplate {
    body: String,
    max_grade: u8,
}

impl Default for JudgeTemplate {
    fn default() -> Self {
        Self::new(BUILTIN_JUDGE_PROMPT)
    }
}

impl JudgeTemplate {
    pub fn new(body: impl Into<String>) -> Self {
        Self {
            body: body.into(),
            max_grade: MAX_GRADE,
        }
    }

    pub fn with_max_grade(mut self, max_grade: u8) -> Self {
        self.max_grade = max_grade;
        self
    }

    pub fn max_grade(&self) -> u8 {
        self.max_grade
    }

    pub fn load(path: &Path) -> Result<Self, TriplesError> {
        Ok(Self::new(std::fs::read_to_string(path)?))
    }

    pub fn render(&self, candidate: &Draft, reference: &Draft, catalog: &PropertyCatalog) -> String {
        let labels = catalog.labels().collect::<Vec<_>>().join(", ");
        self.body
            .replace("{{catalog}}", &labels)
            .replace("{{max_grade}}", &self.max_grade.to_string())
            .replace("{{candidate}}", &render_data(candidate))
            .replace("{{reference}}", &render_data(reference))
    }
}

/// Read a grade from a judge reply: a bare integer in `0..=max`, optionally
/// followed by `/max`.
pub fn parse_grade(reply: &str, max: u8) -> Option<u8> {
    let s = reply.trim();
    let s = s.strip_suffix(&format!("/{max}")).map(str::trim_end).unwrap_or(s);
    let g: u8 = s.parse().ok()?;
    (g <= max).then_some(g)
}

/// Grade a draft that passed the formal gate. Formal failures are returned
/// unchanged without contacting the judge. An unusable reply is retried once,
/// then the grade is left absent with a violation.
pub fn soft_reward(
    formal: RewardScore,
    draft: &Draft,
    ground_truth: &Draft,
    judge: &dyn Judge,
    template: &JudgeTemplate,
    catalog: &PropertyCatalog,
) -> Result<RewardScore, TriplesError> {
    if !formal.formal_pass {
        return Ok(formal);
    }
    let prompt = template.render(draft, ground_truth, catalog);
    let mut score = formal;
    let mut last = String::new();
    for _ in 0..2 {
        last = judge.grade(&prompt)?;
        if let Some(g) = parse_grade(&last, template.max_grade()) {
            score.grade = Some(g);
            return Ok(score);
        }
    }
    score.violations.push(format!("judge reply is not a grade: {:?}", last.trim()));
    Ok(score)
}

fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Fixed rubric: each reference property earns 1 when the candidate gives the
/// same value, 1/2 when one value contains the other, 0 otherwise; each
/// candidate property absent from the reference costs 1/2. The grade is the
/// share of the reference scaled to `0..=max` and rounded.
pub fn rubric_grade(candidate: &[DraftTriple], reference: &[DraftTriple], max: u8) -> u8 {
    if reference.is_empty() {
        return if candidate.is_empty() { max } else { 0 };
    }
    let cand: BTreeMap<&str, String> = candidate.iter().map(|t| (t.property.trim(), fold(t.object.text()))).collect();
    let mut points = 0.0;
    for t in reference {
        let want = fold(t.object.text());
        match cand.get(t.property.trim()) {
            Some(got) if *got == want => points += 1.0,
            Some(got) if !got.is_empty() && (want.contains(got.as_str()) || got.contains(&want)) => points += 0.5,
            _ => {}
        }
    }
    let known: BTreeSet<&str> = reference.iter().map(|t| t.property.trim()).collect();
    points -= 0.5 * cand.keys().filter(|p| !known.contains(*p)).count() as f64;
    let share = (points / reference.len() as f64).clamp(0.0, 1.0);
    (share * max as f64).round() as u8
}

/// Offline judge applying [`rubric_grade`] to the first two data sections of
/// the prompt (candidate first, then reference).
#[derive(Debug)]
pub struct StubJudge {
    max_grade: u8,
    calls: AtomicUsize,
}

impl Default for StubJudge {
    fn default() -> Self {
        Self::new()
    }
}

impl StubJudge {
    pub fn new() -> Self {
        Self::with_max_grade(MAX_GRADE)
    }

    pub fn with_max_grade(max_grade: u8) -> Self {
        Self {
            max_grade,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Judge for StubJudge {
    fn grade(&self, prompt: &str) -> Result<String, JudgeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let sections = data_sections(prompt);
        let [(_, cand), (_, reference), ..] = &sections[..] else {
            return Err(JudgeError::Rejected("prompt lacks candidate and reference data".into()));
        };
        Ok(rubric_grade(cand, reference, self.max_grade).to_string())
    }
}

/// Judge replaying fixed replies in order; repeats the last one when the
/// script runs out.
#[derive(Debug)]
pub struct ScriptedJudge {
    replies: Mutex<VecDeque<Result<String, String>>>,
    last: Mutex<Option<Result<String, String>>>,
    calls: AtomicUsize,
}

impl ScriptedJudge {
    /// `Err` entries become transport failures.
    pub fn new(replies: impl IntoIterator<Item = Result<String, String>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            last: Mutex::new(None),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Judge for ScriptedJudge {
    fn grade(&self, _prompt: &str) -> Result<String, JudgeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let next = self.replies.lock().expect("judge script lock").pop_front();
        let mut last = self.last.lock().expect("judge script lock");
        if let Some(n) = next {
            *last = Some(n);
        }
        match last.clone() {
            Some(Ok(t)) => Ok(t),
            Some(Err(e)) => Err(JudgeError::Transport(e)),
            None => Err(JudgeError::Rejected("empty judge script".into())),
        }
    }
}

#[derive(Serialize)]
struct GradeBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct GradeReply {
    reply: String,
}

/// HTTP judge: `POST {base}/grade` with `{"prompt": ...}`, answered by
/// `{"reply": ...}`.
#[derive(Debug, Clone)]
pub struct HttpJudge {
    base_url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpJudge {
    pub fn new(base_url: impl Into<String>, token: Option<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token,
            agent: ureq::AgentBuilder::new()
                .timeout(std::time::Duration::from_secs(120))
                .build(),
        }
    }

    pub fn from_env(base_url: impl Into<String>, token_env: Option<&str>) -> Self {
        Self::new(base_url, token_env.and_then(|v| std::env::var(v).ok()))
    }
}

impl Judge for HttpJudge {
    fn grade(&self, prompt: &str) -> Result<String, JudgeError> {
        let mut req = self.agent.post(&format!("{}/grade", self.base_url));
        if let Some(t) = &self.token {
            req = req.set("Authorization", &format!("Bearer {t}"));
        }
        let reply: GradeReply = req
            .send_json(GradeBody { prompt })
            .map_err(|e| match e {
                ureq::Error::Status(code, _) if code < 500 && code != 429 => {
                    JudgeError::Rejected(format!("HTTP {code}"))
                }
                other => JudgeError::Transport(other.to_string()),
            })?
            .into_json()
            .map_err(|e| JudgeError::Transport(format!("bad judge reply: {e}")))?;
        Ok(reply.reply)
    }
}

#[cfg(test)]
mod tests {
    use super::super::draft::ObjectValue;
    use super::*;

    fn text(s: &str) -> ObjectValue {
        ObjectValue::Text(s.into())
    }

    fn sample() -> Draft {
        Draft::new(
            "Coquin de Coq",
            vec![
                ("title", text("Coquin de Coq")),
                ("director", text("Guy Rétoré")),
                ("author", text("Sean O'Casey")),
            ],
        )
    }

    #[test]
    fn formal_rules() {
        let c = PropertyCatalog::builtin();
        assert!(formal_reward(&sample(), &c).formal_pass);
        let mut d = sample();
        d.triples.push(DraftTriple {
            property: "publisher".into(),
            object: text("x"),
        });
        assert_eq!(formal_reward(&d, &c).violations, ["unknown property: publisher"]);
        let mut d = sample();
        d.triples.push(d.triples[1].clone());
        let r = formal_reward(&d, &c);
        assert!(!r.formal_pass);
        assert_eq!(r.violations, ["duplicate property: director"]);
        assert_eq!(r.total(), 0.0);
    }

    #[test]
    fn grades_parse_strictly() {
        assert_eq!(parse_grade(" 7\n", 10), Some(7));
        assert_eq!(parse_grade("10/10", 10), Some(10));
        assert_eq!(parse_grade("20/20", 20), Some(20));
        for bad in ["eleven", "11", "-1", "7.5", "", "grade 7"] {
            assert_eq!(parse_grade(bad, 10), None, "{bad}");
        }
    }

    #[test]
    fn identical_draft_gets_ten() {
        let c = PropertyCatalog::builtin();
        let judge = StubJudge::new();
        let d = sample();
        let s = soft_reward(formal_reward(&d, &c), &d, &d, &judge, &JudgeTemplate::default(), &c).unwrap();
        assert_eq!(s.grade, Some(10));
        assert_eq!(judge.calls(), 1);
    }

    #[test]
    fn truncated_title_earns_partial_credit() {
        let c = PropertyCatalog::builtin();
        let mut d = sample();
        d.triples[0].object = text("Coquin");
        let s = soft_reward(formal_reward(&d, &c), &d, &sample(), &StubJudge::new(), &JudgeTemplate::default(), &c)
            .unwrap();
        // oracle: (0.5 + 1 + 1) / 3 of the reference
        let expected = (2.5f64 / 3.0 * 10.0).round() as u8;
        assert_eq!(s.grade, Some(expected));
        assert!(expected > 0 && expected < 10);
    }

    #[test]
    fn unusable_reply_retried_once() {
        let c = PropertyCatalog::builtin();
        let d = sample();
        let judge = ScriptedJudge::new([Ok("eleven".to_string())]);
        let s = soft_reward(formal_reward(&d, &c), &d, &d, &judge, &JudgeTemplate::default(), &c).unwrap();
        assert_eq!(judge.calls(), 2);
        assert_eq!(s.grade, None);
        assert!(s.formal_pass);
        assert_eq!(s.violations.len(), 1);

        let judge = ScriptedJudge::new([Ok("x".to_string()), Ok("6".to_string())]);
        let s = soft_reward(formal_reward(&d, &c), &d, &d, &judge, &JudgeTemplate::default(), &c).unwrap();
        assert_eq!(s.grade, Some(6));
        assert!(s.violations.is_empty());
    }

    #[test]
    fn gate_and_transport() {
        let c = PropertyCatalog::builtin();
        let mut d = sample();
        d.triples.push(d.triples[0].clone());
        let judge = StubJudge::new();
        let s = soft_reward(formal_reward(&d, &c), &d, &sample(), &judge, &JudgeTemplate::default(), &c).unwrap();
        assert!(!s.formal_pass && s.grade.is_none());
        assert_eq!(judge.calls(), 0);

        let down = ScriptedJudge::new([Err("connection refused".to_string())]);
        let d = sample();
        assert!(matches!(
            soft_reward(formal_reward(&d, &c), &d, &d, &down, &JudgeTemplate::default(), &c),
            Err(TriplesError::Judge(JudgeError::Transport(_)))
        ));
    }

    #[test]
    fn template_mentions_catalog_and_both_drafts() {
        let c = PropertyCatalog::builtin();
        let p = JudgeTemplate::default().render(&sample(), &sample(), &c);
        assert!(p.contains("date of first performance"));
        assert_eq!(data_sections(&p).len(), 2);
        assert!(!p.contains("{{"));
    }
}
