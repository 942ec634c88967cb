//! `score-steps`: replay a recorded trace of training steps through the
//! reward policy and append one summary per step to the step log.

use crate::triples::{
    score_step, HttpJudge, Judge, JudgeTemplate, StepLog, StubJudge, SyntheticTrace, TriplesError,
};

use super::structure::catalog;
use super::{Outcome, PipelineConfig, PipelineError, RunOptions, ServiceKind};

fn judge(cfg: &PipelineConfig) -> Box<dyn Judge> {
    let j = &cfg.judge;
    match j.service {
        ServiceKind::Stub => Box::new(StubJudge::with_max_grade(j.max_grade)),
        ServiceKind::Http => Box::new(HttpJudge::from_env(j.base_url.clone(), j.token_env.as_deref())),
    }
}

/// Score every step not yet in `reports/steps.jsonl`. The log doubles as the
/// resume point, so an interrupted replay continues where it stopped.
pub fn cmd_score_steps(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, PipelineError> {
    let trace = SyntheticTrace::load(&cfg.paths.steps, cfg.steps.shape)
        .map_err(|e| PipelineError::Input(format!("{}: {e}", cfg.paths.steps.display())))?;
    let log_path = cfg.paths.reports.join("steps.jsonl");
    let done = if log_path.exists() {
        StepLog::read(&log_path).map_err(|e| PipelineError::Input(e.to_string()))?
    } else {
        Vec::new()
    };
    if done.len() > trace.batches.len()
        || done.iter().zip(&trace.batches).any(|(s, b)| s.step_index != b.step_index)
    {
        return Err(PipelineError::Input(format!(
            "{} does not match the trace in {}",
            log_path.display(),
            cfg.paths.steps.display()
        )));
    }
    let todo = &trace.batches[done.len()..];
    let mut outcome = Outcome::default();
    if opts.dry_run || todo.is_empty() {
        outcome.note(format!("{} step(s) to score, {} already logged", todo.len(), done.len()));
        return Ok(outcome);
    }
    let catalog = catalog(cfg)?;
    let template = match &cfg.paths.judge_prompt {
        Some(p) => JudgeTemplate::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
        None => JudgeTemplate::default(),
    }
    .with_max_grade(cfg.judge.max_grade);
    let judge = judge(cfg);
    let pool = opts.pool()?;
    let mut log = StepLog::open(&log_path).map_err(|e| PipelineError::Input(e.to_string()))?;
    for batch in todo {
        let (_, summary) = pool
            .install(|| score_step(batch.clone(), trace.shape, &catalog, &trace.ground_truths, judge.as_ref(), &template))
            .map_err(|e| match e {
                TriplesError::Judge(j) => PipelineError::Endpoint(j.to_string()),
                other => PipelineError::Input(other.to_string()),
            })?;
        log::debug!("step {}: pass {:.3} mean {:.3}", summary.step_index, summary.pass_rate, summary.mean_grade);
        log.append(&summary).map_err(|e| PipelineError::Input(e.to_string()))?;
    }
    outcome.written.push(log_path);
    outcome.note(format!("scored {} step(s)", todo.len()));
    Ok(outcome)
}
