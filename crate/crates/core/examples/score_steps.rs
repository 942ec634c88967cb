//! Replay a synthetic training trace through the two-stage reward: drafts
//! must pass the formal check before the (offline) judge grades them.
//!
//! `cargo run --example score_steps -- [steps]`

use std::error::Error;

use showprog::triples::{score_step, synthetic_trace, JudgeTemplate, PropertyCatalog, StepShape, StubJudge};

fn main() -> Result<(), Box<dyn Error>> {
    let steps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100);
    let shape = StepShape::default();
    let trace = synthetic_trace(steps, shape, 1);
    let catalog = PropertyCatalog::builtin();
    let judge = StubJudge::new();
    let template = JudgeTemplate::default();

    let every = (steps / 10).max(1);
    for batch in trace.batches {
        let (_, s) = score_step(batch, shape, &catalog, &trace.ground_truths, &judge, &template)?;
        if (s.step_index as usize).is_multiple_of(every) {
            println!(
                "step {:>4}: pass rate {:.2}, mean reward {:.2}, {} of {} judged",
                s.step_index, s.pass_rate, s.mean_grade, s.judged, s.drafts
            );
        }
    }
    println!("{} judge call(s)", judge.calls());
    Ok(())
}
